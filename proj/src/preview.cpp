#include "mcmpc/preview.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

namespace mcmpc {

AxisState propagate_axis(const AxisState& state, double jerk, double dt) {
    if (dt <= 0.0) throw StructuralError("propagate_axis: dt must be positive");
    if (!std::isfinite(state.position) || !std::isfinite(state.velocity) ||
        !std::isfinite(state.acceleration) || !std::isfinite(jerk))
        throw NumericError("propagate_axis: non-finite input");
    AxisState next;
    next.position = state.position + state.velocity * dt +
                    state.acceleration * dt * dt / 2.0 + jerk * dt * dt * dt / 6.0;
    next.velocity = state.velocity + state.acceleration * dt + jerk * dt * dt / 2.0;
    next.acceleration = state.acceleration + jerk * dt;
    return next;
}

PreviewMatrices build_preview_matrices(const PreviewParams& params) {
    if (params.steps < 1) throw StructuralError("preview: N must be >= 1");
    if (params.dt <= 0.0) throw StructuralError("preview: T must be positive");
    const int n = params.steps;
    const double t = params.dt;

    // single-step maps
    Mat3 a;
    a << 1, t, t * t / 2.0,
         0, 1, t,
         0, 0, 1;
    Vec3 b(t * t * t / 6.0, t * t / 2.0, t);

    PreviewMatrices m;
    m.params = params;
    m.pos_state.setZero(n, 3);
    m.vel_state.setZero(n, 3);
    m.acc_state.setZero(n, 3);
    m.pos_input.setZero(n, n);
    m.vel_input.setZero(n, n);
    m.acc_input.setZero(n, n);

    // build from the recursion: row k holds A^(k+1) and the convolved inputs
    Mat3 a_pow = Mat3::Identity();
    Mat input_cols = Mat::Zero(3, n);  // effect of each jerk on the current step state
    for (int k = 0; k < n; ++k) {
        input_cols = a * input_cols;
        input_cols.col(k) = b;
        a_pow = a * a_pow;
        m.pos_state.row(k) = a_pow.row(0);
        m.vel_state.row(k) = a_pow.row(1);
        m.acc_state.row(k) = a_pow.row(2);
        m.pos_input.row(k) = input_cols.row(0);
        m.vel_input.row(k) = input_cols.row(1);
        m.acc_input.row(k) = input_cols.row(2);
    }
    return m;
}

std::shared_ptr<const PreviewMatrices> preview_matrices_cached(const PreviewParams& params) {
    static std::mutex mutex;
    static std::map<std::pair<int, double>, std::shared_ptr<const PreviewMatrices>> cache;
    const auto key = std::make_pair(params.steps, params.dt);
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto built = std::make_shared<const PreviewMatrices>(build_preview_matrices(params));
    cache.emplace(key, built);
    return built;
}

}  // namespace mcmpc
