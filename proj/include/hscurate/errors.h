/*
 * Copyright 2026 The hscurate Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef HSCURATE_ERRORS_H_
#define HSCURATE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace hscurate {

// Root of the library's exception hierarchy. The CLI maps each subclass to
// an exit code, so new failure kinds should derive from one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// An input file or record could not be parsed.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A remote peer (model adapter, LLM endpoint) could not be reached.
class TransportError : public Error {
 public:
  using Error::Error;
};

// A model adapter answered, but the answer violates the wire protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// An oracle answered, but its answer is unusable (or the mock has no entry).
class OracleError : public Error {
 public:
  using Error::Error;
};

// An intervention could not complete; no partial snapshot was produced.
class InterventionAborted : public Error {
 public:
  InterventionAborted(const std::string& what, bool oracle_failure)
      : Error(what), oracle_failure_(oracle_failure) {}
  bool oracle_failure() const { return oracle_failure_; }

 private:
  bool oracle_failure_;
};

}  // namespace hscurate

#endif  // HSCURATE_ERRORS_H_
