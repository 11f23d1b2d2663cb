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

#include "sbc/interp.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace sbc {

std::string_view interpolant_name(InterpolantKind kind) {
    switch (kind) {
        case InterpolantKind::kLagrange:
            return "lagrange";
        case InterpolantKind::kRbf:
            return "rbf";
        case InterpolantKind::kBump:
            return "bump";
    }
    return "?";
}

InterpolantKind interpolant_from_name(std::string_view name) {
    if (name == "lagrange") {
        return InterpolantKind::kLagrange;
    }
    if (name == "rbf") {
        return InterpolantKind::kRbf;
    }
    if (name == "bump") {
        return InterpolantKind::kBump;
    }
    throw std::invalid_argument("unknown sigma16 mode '" + std::string(name) + "'");
}

void InterpolantMode::validate() const {
    if (kind == InterpolantKind::kRbf && !(bandwidth > 0)) {
        throw std::invalid_argument("rbf bandwidth must be positive");
    }
    if (kind == InterpolantKind::kBump && !(radius > 0 && radius < 1)) {
        throw std::invalid_argument("bump radius must lie in (0, 1)");
    }
}

namespace {

void lagrange_basis(double a, double b, CornerBasis &out) {
    out.phi = {(1 - a) * (1 - b), (1 - a) * b, a * (1 - b), a * b};
    out.d_a = {-(1 - b), -b, 1 - b, b};
    out.d_b = {-(1 - a), 1 - a, -a, a};
}

// Normalized kernels computed as a softmax over log-kernel values. `logw` is
// -inf where a kernel vanishes; `dl_a`/`dl_b` are its partials.
void normalize_log_kernels(
    const std::array<double, kNumCorners> &logw,
    const std::array<double, kNumCorners> &dl_a,
    const std::array<double, kNumCorners> &dl_b,
    double min_normalizer,
    CornerBasis &out) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double l : logw) {
        mx = std::max(mx, l);
    }
    bool degenerate = !std::isfinite(mx);
    double total = 0;
    std::array<double, kNumCorners> e{};
    if (!degenerate) {
        for (int c = 0; c < kNumCorners; c++) {
            e[c] = std::isfinite(logw[c]) ? std::exp(logw[c] - mx) : 0.0;
            total += e[c];
        }
        // Normalizer is total * exp(mx).
        if (min_normalizer > 0 && mx + std::log(total) < std::log(min_normalizer)) {
            degenerate = true;
        }
    }
    if (degenerate) {
        out.phi.fill(0.25);
        out.d_a.fill(0.0);
        out.d_b.fill(0.0);
        return;
    }
    double mean_a = 0, mean_b = 0;
    for (int c = 0; c < kNumCorners; c++) {
        out.phi[c] = e[c] / total;
        if (out.phi[c] > 0) {
            mean_a += out.phi[c] * dl_a[c];
            mean_b += out.phi[c] * dl_b[c];
        }
    }
    for (int c = 0; c < kNumCorners; c++) {
        if (out.phi[c] > 0) {
            out.d_a[c] = out.phi[c] * (dl_a[c] - mean_a);
            out.d_b[c] = out.phi[c] * (dl_b[c] - mean_b);
        } else {
            out.d_a[c] = 0;
            out.d_b[c] = 0;
        }
    }
}

void rbf_basis(double s, double a, double b, CornerBasis &out) {
    double inv = 1.0 / (s * s);
    std::array<double, kNumCorners> logw{}, dl_a{}, dl_b{};
    for (int c = 0; c < kNumCorners; c++) {
        double da = a - kCorners[c][0];
        double db = b - kCorners[c][1];
        logw[c] = -0.5 * (da * da + db * db) * inv;
        dl_a[c] = -da * inv;
        dl_b[c] = -db * inv;
    }
    normalize_log_kernels(logw, dl_a, dl_b, 0.0, out);
}

void bump_basis(double r, double a, double b, CornerBasis &out) {
    double inv_r2 = 1.0 / (r * r);
    std::array<double, kNumCorners> logw{}, dl_a{}, dl_b{};
    for (int c = 0; c < kNumCorners; c++) {
        double da = a - kCorners[c][0];
        double db = b - kCorners[c][1];
        double t2 = (da * da + db * db) * inv_r2;
        if (t2 >= 1.0) {
            logw[c] = -std::numeric_limits<double>::infinity();
            dl_a[c] = 0;
            dl_b[c] = 0;
            continue;
        }
        double u = 1.0 - t2;
        logw[c] = 1.0 - 1.0 / u;
        // d(1 - 1/u)/d(t2) = -1/u^2; d(t2)/da = 2 da / r^2.
        double g = -2.0 * inv_r2 / (u * u);
        dl_a[c] = g * da;
        dl_b[c] = g * db;
    }
    normalize_log_kernels(logw, dl_a, dl_b, kBumpMinNormalizer, out);
}

}  // namespace

CornerBasis corner_basis_with_grad(const InterpolantMode &mode, double a, double b) {
    CornerBasis out;
    switch (mode.kind) {
        case InterpolantKind::kLagrange:
            lagrange_basis(a, b, out);
            break;
        case InterpolantKind::kRbf:
            rbf_basis(mode.bandwidth, a, b, out);
            break;
        case InterpolantKind::kBump:
            bump_basis(mode.radius, a, b, out);
            break;
    }
    return out;
}

std::array<double, kNumCorners> corner_basis(const InterpolantMode &mode, double a, double b) {
    return corner_basis_with_grad(mode, a, b).phi;
}

std::array<double, kNumGates> sigma16(const InterpolantMode &mode, double a, double b) {
    auto phi = corner_basis(mode, a, b);
    std::array<double, kNumGates> out{};
    for (int g = 0; g < kNumGates; g++) {
        double v = 0;
        for (int c = 0; c < kNumCorners; c++) {
            if (gate_bit(g + 1, c)) {
                v += phi[c];
            }
        }
        out[g] = v;
    }
    return out;
}

double varsigma(double x1, double x2) {
    double n2 = x1 * x1 + x2 * x2;
    if (n2 >= 0.25) {
        return 0.0;
    }
    return std::numbers::e * std::exp(1.0 / (4.0 * n2 - 1.0));
}

}  // namespace sbc
