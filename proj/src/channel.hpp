#ifndef MAPOS_CHANNEL_HPP
#define MAPOS_CHANNEL_HPP

#include <complex>
#include <vector>

#include "geometry.hpp"
#include "rng.hpp"

// Rician multipath channel between a base station with movable transmit
// antennas and single-antenna aerial receivers, plus the SNR / secrecy-rate /
// array-gain metrics built on it.
namespace mapos::channel {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;
using cmat = std::vector<cvec>; // row-major: cmat[row][col]

enum class NodeRole { BaseStation, Bob, Eve };

struct NodeState {
    Vec3 position; // meters
    NodeRole role = NodeRole::Bob;
};

// Angular geometry of the propagation paths, LoS entries first.
struct PathSet {
    int los_count = 0;
    int nlos_count = 0;
    struct Angles {
        double theta; // elevation, [-pi/2, pi/2]
        double phi;   // azimuth, [-pi, pi]
    };
    std::vector<Angles> angles;

    int total() const { return los_count + nlos_count; }
};

// Complex path responses and large-scale parameters for one link.
struct ChannelRealization {
    cplx sigma_los;         // amplitude of the LoS path response
    cvec sigma_nlos;        // diagonal of the NLoS path response matrix
    double distance = 0.0;  // meters, array reference to node
    double alpha = 2.0;     // path loss exponent
    double beta0 = 1.0;     // reference gain at 1 m
};

struct LinkBudget {
    double tx_power = 1.0;       // P_com, watts
    double noise_power = 1e-5;   // watts
    double rician_kappa = 10.0;  // LoS/NLoS power ratio, >= 0
    double wavelength = 0.0107;  // meters
};

// Per-link large-scale and multipath configuration shared by both receivers.
struct ChannelScenario {
    double alpha = 2.8;
    double beta0 = 1e-3;
    int los_paths = 1;
    int nlos_paths = 4;
    Vec3 array_ref; // fixed distance/angle reference: movement-box center
};

// Unit direction (cos t cos p, cos t sin p, sin t) for elevation t, azimuth p.
Vec3 direction_vector(double theta, double phi);

// Elevation/azimuth of the LoS path from the array reference toward a node.
PathSet::Angles los_angles(const Vec3& array_ref, const Vec3& node);

// Per-path phase profile exp(i 2*pi/lambda * p.r_j) of one antenna.
cvec steering_vector(const Vec3& p, const PathSet& paths, double lambda);

// L_t x M matrix whose m-th column is the steering vector of antenna m.
cmat field_response_matrix(const ArrayLayout& layout, const PathSet& paths, double lambda);

// `count` random scatter directions: theta ~ U[-pi/2, pi/2], phi ~ U[-pi, pi].
PathSet sample_nlos_paths(Rng& rng, int count);

// Draws the complex path responses for one link at distance d.
ChannelRealization sample_realization(double distance, double alpha, double beta0,
                                      int nlos_count, Rng& rng);

// Rician combination H = sqrt(k/(k+1)) h_los + sqrt(1/(k+1)) h_nlos with
// h = (f^T Sigma G)^T per link class and f all-ones.
cvec sample_channel(const ArrayLayout& layout, const NodeState& node, const PathSet& paths,
                    const LinkBudget& budget, double alpha, double beta0,
                    const Vec3& array_ref, Rng& rng);

// Equal-power transmit vector w = sqrt(P/M) * 1_M.
cvec equal_power_weights(std::size_t m_antennas, double tx_power);

// Maximum ratio transmission weights w = sqrt(P) H / ||H||.
cvec mrt_weights(const cvec& h_bob, double tx_power);

// |H^H w|^2 / noise.
double snr(const cvec& h, const cvec& w, double noise_power);

// max(0, log2(1+g_b) - log2(1+g_e)) in bits/s/Hz.
double secrecy_rate(double gamma_bob, double gamma_eve);

// Monte Carlo mean secrecy rate over `mc_samples` independent NLoS draws with
// the LoS geometry held fixed. Deterministic given the rng state. Uses the
// fixed equal-power transmit vector.
double expected_secrecy_rate(const ArrayLayout& layout, const NodeState& bob,
                             const NodeState& eve, const LinkBudget& budget,
                             const ChannelScenario& scenario, int mc_samples, Rng& rng);

// Array factor power |sum_m w_m exp(i 2*pi/lambda * p_m.r(theta,phi))|^2.
double array_pattern_gain(const ArrayLayout& layout, const cvec& w, double theta,
                          double phi, double lambda);

// Uniform half-wavelength-spaced planar grid centered in the movement box;
// the fixed-antenna reference all movable layouts are compared against.
ArrayLayout fixed_grid_layout(std::size_t m_antennas, double lambda, const Box& box);

} // namespace mapos::channel

#endif
