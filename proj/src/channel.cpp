#include "channel.hpp"

#include <cmath>

#include "error.hpp"

namespace mapos::channel {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
}

Vec3 direction_vector(double theta, double phi) {
    return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi),
            std::sin(theta)};
}

PathSet::Angles los_angles(const Vec3& array_ref, const Vec3& node) {
    Vec3 d = node - array_ref;
    double r = d.norm();
    if (r <= 0.0) throw numeric_error("LoS geometry undefined: node collocated with array reference");
    return {std::asin(d.z / r), std::atan2(d.y, d.x)};
}

cvec steering_vector(const Vec3& p, const PathSet& paths, double lambda) {
    cvec out(paths.angles.size());
    for (std::size_t j = 0; j < paths.angles.size(); ++j) {
        Vec3 r = direction_vector(paths.angles[j].theta, paths.angles[j].phi);
        out[j] = std::polar(1.0, kTwoPi / lambda * p.dot(r));
    }
    return out;
}

cmat field_response_matrix(const ArrayLayout& layout, const PathSet& paths, double lambda) {
    const std::size_t l = paths.angles.size();
    const std::size_t m = layout.size();
    cmat g(l, cvec(m));
    for (std::size_t col = 0; col < m; ++col) {
        cvec s = steering_vector(layout.positions[col], paths, lambda);
        for (std::size_t row = 0; row < l; ++row) g[row][col] = s[row];
    }
    return g;
}

PathSet sample_nlos_paths(Rng& rng, int count) {
    PathSet ps;
    ps.los_count = 0;
    ps.nlos_count = count;
    ps.angles.reserve(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        double theta = rng.uniform(-M_PI / 2.0, M_PI / 2.0);
        double phi = rng.uniform(-M_PI, M_PI);
        ps.angles.push_back({theta, phi});
    }
    return ps;
}

ChannelRealization sample_realization(double distance, double alpha, double beta0,
                                      int nlos_count, Rng& rng) {
    if (distance <= 0.0) throw numeric_error("channel distance must be positive");
    ChannelRealization cr;
    cr.distance = distance;
    cr.alpha = alpha;
    cr.beta0 = beta0;
    double gain = beta0 * std::pow(distance, -alpha);
    cr.sigma_los = std::sqrt(gain);
    if (nlos_count > 0) {
        cr.sigma_nlos.resize(static_cast<std::size_t>(nlos_count));
        double var = gain / static_cast<double>(nlos_count);
        for (auto& s : cr.sigma_nlos) s = rng.complex_normal(var);
    }
    return cr;
}

namespace {

// h = (f^T Sigma G)^T for a diagonal Sigma: h[m] = sum_j sigma_j G[j][m].
cvec path_combine(const cvec& sigma, const cmat& g, std::size_t m_antennas) {
    cvec h(m_antennas, cplx{0.0, 0.0});
    for (std::size_t j = 0; j < sigma.size(); ++j)
        for (std::size_t m = 0; m < m_antennas; ++m) h[m] += sigma[j] * g[j][m];
    return h;
}

} // namespace

cvec sample_channel(const ArrayLayout& layout, const NodeState& node, const PathSet& paths,
                    const LinkBudget& budget, double alpha, double beta0,
                    const Vec3& array_ref, Rng& rng) {
    if (node.role == NodeRole::BaseStation)
        throw numeric_error("sample_channel expects a receiving node (Bob or Eve)");
    const double kappa = budget.rician_kappa;
    if (kappa > 0.0 && paths.los_count < 1)
        throw numeric_error("Rician factor > 0 requires at least one LoS path");

    const double distance = node.position.dist(array_ref);
    if (distance <= 0.0) throw numeric_error("node collocated with the array reference");

    const std::size_t m = layout.size();
    const double gain = beta0 * std::pow(distance, -alpha);

    // LoS block: deterministic amplitude sqrt(beta0 d^-alpha), split across
    // LoS paths so the total LoS power stays beta0 d^-alpha.
    cvec h_los(m, cplx{0.0, 0.0});
    if (paths.los_count > 0) {
        PathSet los;
        los.los_count = paths.los_count;
        los.angles.assign(paths.angles.begin(), paths.angles.begin() + paths.los_count);
        cmat g_los = field_response_matrix(layout, los, budget.wavelength);
        cvec sigma(static_cast<std::size_t>(paths.los_count),
                   cplx{std::sqrt(gain / paths.los_count), 0.0});
        h_los = path_combine(sigma, g_los, m);
    }

    // NLoS block: diagonal Sigma with i.i.d. CN(0, beta0 d^-alpha / L_nlos).
    cvec h_nlos(m, cplx{0.0, 0.0});
    if (paths.nlos_count > 0) {
        PathSet nlos;
        nlos.nlos_count = paths.nlos_count;
        nlos.angles.assign(paths.angles.begin() + paths.los_count, paths.angles.end());
        cmat g_nlos = field_response_matrix(layout, nlos, budget.wavelength);
        cvec sigma(static_cast<std::size_t>(paths.nlos_count));
        double var = gain / static_cast<double>(paths.nlos_count);
        for (auto& s : sigma) s = rng.complex_normal(var);
        h_nlos = path_combine(sigma, g_nlos, m);
    }

    const double w_los = std::sqrt(kappa / (kappa + 1.0));
    const double w_nlos = std::sqrt(1.0 / (kappa + 1.0));
    cvec h(m);
    for (std::size_t i = 0; i < m; ++i) h[i] = w_los * h_los[i] + w_nlos * h_nlos[i];
    return h;
}

cvec equal_power_weights(std::size_t m_antennas, double tx_power) {
    return cvec(m_antennas, cplx{std::sqrt(tx_power / static_cast<double>(m_antennas)), 0.0});
}

cvec mrt_weights(const cvec& h_bob, double tx_power) {
    double norm_sq = 0.0;
    for (const auto& h : h_bob) norm_sq += std::norm(h);
    if (norm_sq <= 0.0) throw numeric_error("MRT weights undefined for a zero channel");
    double scale = std::sqrt(tx_power / norm_sq);
    cvec w(h_bob.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = scale * h_bob[i];
    return w;
}

double snr(const cvec& h, const cvec& w, double noise_power) {
    if (noise_power <= 0.0) throw numeric_error("noise power must be positive");
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < h.size(); ++i) acc += std::conj(h[i]) * w[i];
    return std::norm(acc) / noise_power;
}

double secrecy_rate(double gamma_bob, double gamma_eve) {
    double diff = std::log2(1.0 + gamma_bob) - std::log2(1.0 + gamma_eve);
    return diff > 0.0 ? diff : 0.0;
}

double expected_secrecy_rate(const ArrayLayout& layout, const NodeState& bob,
                             const NodeState& eve, const LinkBudget& budget,
                             const ChannelScenario& scenario, int mc_samples, Rng& rng) {
    if (mc_samples < 1) throw numeric_error("Monte Carlo sample count must be >= 1");

    const cvec w = equal_power_weights(layout.size(), budget.tx_power);
    PathSet bob_paths, eve_paths;
    bob_paths.los_count = eve_paths.los_count = scenario.los_paths;
    for (int j = 0; j < scenario.los_paths; ++j) {
        bob_paths.angles.push_back(los_angles(scenario.array_ref, bob.position));
        eve_paths.angles.push_back(los_angles(scenario.array_ref, eve.position));
    }

    // With no NLoS paths every draw is identical; one evaluation suffices.
    const int draws = scenario.nlos_paths == 0 ? 1 : mc_samples;
    double acc = 0.0;
    for (int s = 0; s < draws; ++s) {
        PathSet bp = bob_paths;
        PathSet ep = eve_paths;
        PathSet bob_nlos = sample_nlos_paths(rng, scenario.nlos_paths);
        PathSet eve_nlos = sample_nlos_paths(rng, scenario.nlos_paths);
        bp.nlos_count = bob_nlos.nlos_count;
        bp.angles.insert(bp.angles.end(), bob_nlos.angles.begin(), bob_nlos.angles.end());
        ep.nlos_count = eve_nlos.nlos_count;
        ep.angles.insert(ep.angles.end(), eve_nlos.angles.begin(), eve_nlos.angles.end());

        cvec h_b = sample_channel(layout, bob, bp, budget, scenario.alpha, scenario.beta0,
                                  scenario.array_ref, rng);
        cvec h_e = sample_channel(layout, eve, ep, budget, scenario.alpha, scenario.beta0,
                                  scenario.array_ref, rng);
        double gamma_b = snr(h_b, w, budget.noise_power);
        double gamma_e = snr(h_e, w, budget.noise_power);
        acc += secrecy_rate(gamma_b, gamma_e);
    }
    return acc / static_cast<double>(draws);
}

double array_pattern_gain(const ArrayLayout& layout, const cvec& w, double theta,
                          double phi, double lambda) {
    Vec3 r = direction_vector(theta, phi);
    cplx acc{0.0, 0.0};
    for (std::size_t m = 0; m < layout.size(); ++m) {
        double phase = kTwoPi / lambda * layout.positions[m].dot(r);
        acc += w[m] * std::polar(1.0, phase);
    }
    return std::norm(acc);
}

ArrayLayout fixed_grid_layout(std::size_t m_antennas, double lambda, const Box& box) {
    std::size_t side = 1;
    while (side * side < m_antennas) ++side;
    const double spacing = lambda / 2.0;
    const Vec3 c = box.center();
    const double offset = (static_cast<double>(side) - 1.0) / 2.0;
    ArrayLayout layout;
    layout.positions.reserve(m_antennas);
    for (std::size_t m = 0; m < m_antennas; ++m) {
        std::size_t row = m / side;
        std::size_t col = m % side;
        Vec3 p{c.x + (static_cast<double>(col) - offset) * spacing,
               c.y + (static_cast<double>(row) - offset) * spacing, c.z};
        layout.positions.push_back(box.clamp(p));
    }
    return layout;
}

} // namespace mapos::channel
