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
#ifndef HSCURATE_SRC_KERNELS_KERNELS_INTERNAL_H_
#define HSCURATE_SRC_KERNELS_KERNELS_INTERNAL_H_

#include <cstddef>

namespace hscurate::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void dot4(const double* const* q, const double* row, std::size_t n, double* out);
}  // namespace scalar

#if defined(HSCURATE_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void dot4(const double* const* q, const double* row, std::size_t n, double* out);
}  // namespace avx2
#endif

#if defined(HSCURATE_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void dot4(const double* const* q, const double* row, std::size_t n, double* out);
}  // namespace neon
#endif

}  // namespace hscurate::kernels

#endif  // HSCURATE_SRC_KERNELS_KERNELS_INTERNAL_H_
