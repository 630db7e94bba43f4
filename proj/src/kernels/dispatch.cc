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
#include <atomic>
#include <cstdlib>
#include <string>

#include "hscurate/errors.h"
#include "hscurate/kernels/similarity_kernels.h"
#include "kernels_internal.h"

namespace hscurate::kernels {
namespace {

constexpr KernelTable kScalar{Isa::kScalar, &scalar::dot, &scalar::dot4};
#if defined(HSCURATE_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::kAvx2, &avx2::dot, &avx2::dot4};
#endif
#if defined(HSCURATE_HAVE_NEON)
constexpr KernelTable kNeon{Isa::kNeon, &neon::dot, &neon::dot4};
#endif

const KernelTable* initial_table() {
  if (const char* env = std::getenv("HSCURATE_ISA"); env && *env) {
    return &kernels_for(parse_isa(env));
  }
  const auto isas = supported_isas();
  return &kernels_for(isas.back());
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{initial_table()};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar: return "scalar";
    case Isa::kAvx2: return "avx2";
    case Isa::kNeon: return "neon";
  }
  return "?";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::kScalar;
  if (name == "avx2") return Isa::kAvx2;
  if (name == "neon") return Isa::kNeon;
  throw PreconditionError("unknown ISA '" + std::string(name) + "'");
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(HSCURATE_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(HSCURATE_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Isa> supported_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kNeon, Isa::kAvx2}) {
    if (isa_supported(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw PreconditionError("ISA '" + std::string(isa_name(isa)) +
                            "' is not available on this build/CPU");
  }
  switch (isa) {
#if defined(HSCURATE_HAVE_AVX2)
    case Isa::kAvx2: return kAvx2;
#endif
#if defined(HSCURATE_HAVE_NEON)
    case Isa::kNeon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active_kernels() { return *active_slot().load(); }

void set_active_isa(Isa isa) { active_slot().store(&kernels_for(isa)); }

}  // namespace hscurate::kernels
