// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The isac-hbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <limits>

namespace isac::oracle {

// Q1(a, b) = P(X > b^2) for X ~ noncentral chi-squared(2 dof, a^2).
inline double marcum_q1_chi2(double a, double b) {
  boost::math::non_central_chi_squared dist(2.0, a * a);
  return boost::math::cdf(boost::math::complement(dist, b * b));
}

// Q1(a, b) as the tail integral of x exp(-(x^2 + a^2)/2) I0(a x), with the
// exponentially scaled Bessel function to stay finite for large a x.
inline double marcum_q1_quadrature(double a, double b) {
  auto f = [a](double x) {
    const double ax = a * x;
    const double i0_scaled = boost::math::cyl_bessel_i(0, ax) * std::exp(-ax);
    return x * std::exp(-0.5 * (x - a) * (x - a)) * i0_scaled;
  };
  const double upper = std::max(a, b) + 12.0;  // needs a * upper < 700
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, b, upper, 15, 1e-13);
}

}  // namespace isac::oracle
