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
#include <arm_neon.h>

#include "kernels_internal.h"

namespace hscurate::kernels::neon {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void dot4(const double* const* q, const double* row, std::size_t n, double* out) {
  float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
  float64x2_t s2 = vdupq_n_f64(0.0), s3 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t r = vld1q_f64(row + i);
    s0 = vfmaq_f64(s0, vld1q_f64(q[0] + i), r);
    s1 = vfmaq_f64(s1, vld1q_f64(q[1] + i), r);
    s2 = vfmaq_f64(s2, vld1q_f64(q[2] + i), r);
    s3 = vfmaq_f64(s3, vld1q_f64(q[3] + i), r);
  }
  double t[4] = {vaddvq_f64(s0), vaddvq_f64(s1), vaddvq_f64(s2), vaddvq_f64(s3)};
  for (; i < n; ++i) {
    for (int k = 0; k < 4; ++k) t[k] += q[k][i] * row[i];
  }
  for (int k = 0; k < 4; ++k) out[k] = t[k];
}

}  // namespace hscurate::kernels::neon
