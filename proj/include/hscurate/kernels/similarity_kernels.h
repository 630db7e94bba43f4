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
#ifndef HSCURATE_KERNELS_SIMILARITY_KERNELS_H_
#define HSCURATE_KERNELS_SIMILARITY_KERNELS_H_

#include <cstddef>
#include <string_view>
#include <vector>

namespace hscurate::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);
// Throws PreconditionError for an unknown name.
Isa parse_isa(std::string_view name);

// Inner-product kernels over double vectors. Every ISA variant must agree
// with the scalar reference to within floating-point reassociation error.
struct KernelTable {
  Isa isa;
  // <a, b>
  double (*dot)(const double* a, const double* b, std::size_t n);
  // out[q] = <queries[q], row> for q in [0, 4). The row is read once.
  void (*dot4)(const double* const* queries, const double* row, std::size_t n,
               double* out);
};

// Compiled in and supported by the running CPU.
bool isa_supported(Isa isa);
std::vector<Isa> supported_isas();

// Throws PreconditionError if the ISA is unavailable.
const KernelTable& kernels_for(Isa isa);

// Widest supported ISA, unless $HSCURATE_ISA names another one (read on
// first use).
const KernelTable& active_kernels();
void set_active_isa(Isa isa);

}  // namespace hscurate::kernels

#endif  // HSCURATE_KERNELS_SIMILARITY_KERNELS_H_
