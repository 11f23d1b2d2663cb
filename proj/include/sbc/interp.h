// Copyright 2026 The SBC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SBC_INTERP_H
#define SBC_INTERP_H

#include <array>
#include <string>
#include <string_view>

#include "sbc/gate.h"

namespace sbc {

enum class InterpolantKind { kLagrange, kRbf, kBump };

std::string_view interpolant_name(InterpolantKind kind);
InterpolantKind interpolant_from_name(std::string_view name);

/// Normalizers below this value make the bump basis fall back to uniform.
constexpr double kBumpMinNormalizer = 1e-12;

/// Corner basis family for the 16-gate head.
///
///  - lagrange: bilinear basis (1-a)(1-b), (1-a)b, a(1-b), ab.
///  - rbf: normalized Gaussian kernels exp(-|x - corner|^2 / (2 s^2)).
///    Exactly one-hot at corners only in the limit s -> 0; the off-corner
///    leakage at a corner is about 2 exp(-1 / (2 s^2)).
///  - bump: normalized compactly supported kernels psi(|x - corner| / r)
///    with psi(t) = exp(1 - 1 / (1 - t^2)) for t < 1, else 0. Requires
///    0 < r < 1 so the basis is one-hot at the corners.
struct InterpolantMode {
    InterpolantKind kind = InterpolantKind::kRbf;
    double bandwidth = 0.1;  // rbf s
    double radius = 0.9;     // bump r

    static InterpolantMode lagrange() {
        return {InterpolantKind::kLagrange, 0.1, 0.9};
    }
    static InterpolantMode rbf(double s) {
        return {InterpolantKind::kRbf, s, 0.9};
    }
    static InterpolantMode bump(double r) {
        return {InterpolantKind::kBump, 0.1, r};
    }

    /// Throws std::invalid_argument on a non-positive bandwidth or a radius
    /// outside (0, 1).
    void validate() const;
};

/// Basis values and their partial derivatives with respect to a and b.
struct CornerBasis {
    std::array<double, kNumCorners> phi{};
    std::array<double, kNumCorners> d_a{};
    std::array<double, kNumCorners> d_b{};
};

std::array<double, kNumCorners> corner_basis(const InterpolantMode &mode, double a, double b);
CornerBasis corner_basis_with_grad(const InterpolantMode &mode, double a, double b);

/// All 16 gate interpolants at (a, b): component i is sum_c z^{(i)}_c phi_c.
std::array<double, kNumGates> sigma16(const InterpolantMode &mode, double a, double b);

/// The compact bump e * exp(1 / (4 |x|^2 - 1)) on |x| < 1/2, zero outside.
double varsigma(double x1, double x2);

}  // namespace sbc

#endif
