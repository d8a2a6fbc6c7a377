// optics.hpp
// Jones-calculus model of the optical gambling machine.
//
// A photon lives in eight modes: four spatial paths (source, box-A arm,
// box-B arm, merged verification path) times two polarizations (H, V).
// Waveplates act on the polarization pair of one path; polarizing beam
// splitters are lossless mode permutations (H transmits, V reflects, no
// reflection phase).
//
//   source(V) -> polarizer -> HWP(theta_a) -> PBS1 --H--> arm A ----------------.
//                                              |                                 |
//                                              '--V--> arm B -> HWP(fixed)       |
//                                                          -> HWP(theta_b1)      |
//                                                          -> PBS2 --H--> D1     |
//                                                               |                |
//                                                               '--V--> PBS3 <---'
//                                                                         |
//                                           D3 <--V-- PBS4 <- HWP(theta_b2)
//                                                       '--H--> D2

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "qgamble/protocol.hpp"

namespace qgamble {

enum class Path : int { Source = 0, ArmA = 1, ArmB = 2, Merged = 3 };
enum class Polarization : int { H = 0, V = 1 };

constexpr int kModeCount = 8;

constexpr int mode_index(Path path, Polarization pol) {
  return 2 * static_cast<int>(path) + static_cast<int>(pol);
}

template <typename Scalar = double>
using ModeState = Eigen::Matrix<std::complex<Scalar>, kModeCount, 1>;

template <typename Scalar = double>
using ModeOperator = Eigen::Matrix<std::complex<Scalar>, kModeCount, kModeCount>;

template <typename Scalar = double>
using JonesMatrix = Eigen::Matrix<Scalar, 2, 2>;

/// Half-waveplate with fast axis at `theta` radians from H, acting on (H, V).
template <typename Scalar>
JonesMatrix<Scalar> hwp_jones(Scalar theta) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(Scalar(2) * theta);
  const Scalar s = sin(Scalar(2) * theta);
  JonesMatrix<Scalar> m;
  m << c, s, s, -c;
  return m;
}

/// Waveplate angles in radians, each within [0, pi/2].
template <typename Scalar = double>
class CircuitSettings {
 public:
  CircuitSettings(Scalar theta_a, Scalar theta_b1, Scalar theta_b2)
      : theta_a_(checked(theta_a, "theta_a")),
        theta_b1_(checked(theta_b1, "theta_b1")),
        theta_b2_(checked(theta_b2, "theta_b2")) {}

  Scalar theta_a() const { return theta_a_; }
  Scalar theta_b1() const { return theta_b1_; }
  Scalar theta_b2() const { return theta_b2_; }

 private:
  static Scalar checked(Scalar theta, const char* name) {
    const Scalar upper = std::numbers::pi_v<Scalar> / Scalar(2);
    if (!(theta >= Scalar(0) && theta <= upper))
      throw DomainError(name, std::string(name) + " must lie in [0, pi/2] radians");
    return theta;
  }

  Scalar theta_a_, theta_b1_, theta_b2_;
};

/// Dephasing between the two contributions merged at PBS3.
template <typename Scalar = double>
class NoiseModel {
 public:
  NoiseModel() = default;
  explicit NoiseModel(Scalar error_rate) : error_rate_(error_rate) {
    if (!(error_rate >= Scalar(0) && error_rate <= Scalar(1)))
      throw DomainError("noise_e", "error rate must lie in [0, 1]");
  }
  Scalar error_rate() const { return error_rate_; }

 private:
  Scalar error_rate_ = Scalar(0);
};

template <typename Scalar = double>
struct DetectorDistribution {
  Scalar d1, d2, d3;
  Eigen::Matrix<Scalar, 3, 1> vec() const { return {d1, d2, d3}; }
};

/// Angle of the fixed plate on arm B. Its -45 degree branch (equivalently
/// 135 degrees) maps the reflected -V amplitude to +H, keeping both arms
/// non-negative so PBS3/PBS4 interfere as in the abstract protocol.
template <typename Scalar>
constexpr Scalar kFixedPlateAngle = Scalar(3) * std::numbers::pi_v<Scalar> / Scalar(4);

template <typename Scalar>
CircuitSettings<Scalar> angles_for(const PreparationChoice<Scalar>& prep,
                                   const SplittingChoice<Scalar>& splitting) {
  using std::asin;
  using std::atan;
  using std::sqrt;
  const Scalar half(0.5);
  const Scalar sin_a = sqrt(half + prep.epsilon());
  const Scalar root_eta = sqrt(splitting.eta());
  return {half * asin(sin_a > Scalar(1) ? Scalar(1) : sin_a),
          half * asin(root_eta > Scalar(1) ? Scalar(1) : root_eta), half * atan(root_eta)};
}

inline CircuitSettings<double> angles_for(double epsilon, double eta) {
  return angles_for(PreparationChoice<double>(epsilon), SplittingChoice<double>(eta));
}

namespace optics_detail {

template <typename Scalar>
ModeOperator<Scalar> waveplate_on(Path path, Scalar theta) {
  ModeOperator<Scalar> op = ModeOperator<Scalar>::Identity();
  const int base = mode_index(path, Polarization::H);
  op.template block<2, 2>(base, base) = hwp_jones(theta).template cast<std::complex<Scalar>>();
  return op;
}

/// Swaps the listed mode pairs; every PBS in the machine is such a permutation.
template <typename Scalar>
ModeOperator<Scalar> permutation(std::initializer_list<std::pair<int, int>> swaps) {
  ModeOperator<Scalar> op = ModeOperator<Scalar>::Identity();
  for (auto [from, to] : swaps) {
    op(from, from) = op(to, to) = 0;
    op(from, to) = op(to, from) = 1;
  }
  return op;
}

template <typename Scalar>
ModeOperator<Scalar> polarizer_v_on_source() {
  ModeOperator<Scalar> op = ModeOperator<Scalar>::Identity();
  op(mode_index(Path::Source, Polarization::H), mode_index(Path::Source, Polarization::H)) = 0;
  return op;
}

template <typename Scalar>
ModeOperator<Scalar> pbs1() {
  // source H -> arm A (H); source V -> arm B (V)
  return permutation<Scalar>(
      {{mode_index(Path::Source, Polarization::H), mode_index(Path::ArmA, Polarization::H)},
       {mode_index(Path::Source, Polarization::V), mode_index(Path::ArmB, Polarization::V)}});
}

template <typename Scalar>
ModeOperator<Scalar> pbs2_pbs3() {
  // PBS2 leaves arm-B H on course for D1 and reflects arm-B V toward PBS3,
  // where it joins arm A's H light on the merged path.
  return permutation<Scalar>(
      {{mode_index(Path::ArmB, Polarization::V), mode_index(Path::Merged, Polarization::V)},
       {mode_index(Path::ArmA, Polarization::H), mode_index(Path::Merged, Polarization::H)}});
}

template <typename Scalar>
Scalar total_probability(const ModeState<Scalar>& state) {
  return state.squaredNorm();
}

template <typename Scalar>
void check_stage(const ModeState<Scalar>& state, const char* stage) {
  using std::abs;
  if (abs(total_probability(state) - Scalar(1)) > kNormTolerance<Scalar>)
    throw std::logic_error(std::string("probability not conserved after ") + stage);
}

template <typename Scalar>
Scalar intensity(const ModeState<Scalar>& state, Path path, Polarization pol) {
  return std::norm(state(mode_index(path, pol)));
}

}  // namespace optics_detail

/// Mode state at the input of the verification plate HWP(theta_b2).
template <typename Scalar>
ModeState<Scalar> propagate_to_verification(const CircuitSettings<Scalar>& settings) {
  using namespace optics_detail;
  ModeState<Scalar> state = ModeState<Scalar>::Zero();
  state(mode_index(Path::Source, Polarization::V)) = 1;

  state = polarizer_v_on_source<Scalar>() * state;
  check_stage(state, "polarizer");
  state = waveplate_on(Path::Source, settings.theta_a()) * state;
  check_stage(state, "HWP a");
  state = pbs1<Scalar>() * state;
  check_stage(state, "PBS1");
  state = waveplate_on(Path::ArmB, kFixedPlateAngle<Scalar>) * state;
  check_stage(state, "fixed HWP");
  state = waveplate_on(Path::ArmB, settings.theta_b1()) * state;
  check_stage(state, "HWP b1");
  state = pbs2_pbs3<Scalar>() * state;
  check_stage(state, "PBS2/PBS3");
  return state;
}

/// Propagates one photon through the machine. With nonzero error rate e the
/// (D2, D3) pair mixes the interfering result with weight 1-e and the
/// incoherent sum of the two merged contributions with weight e.
template <typename Scalar>
DetectorDistribution<Scalar> run_circuit(const CircuitSettings<Scalar>& settings,
                                         const NoiseModel<Scalar>& noise = {}) {
  using namespace optics_detail;
  const ModeState<Scalar> merged = propagate_to_verification(settings);
  const ModeOperator<Scalar> verify = waveplate_on(Path::Merged, settings.theta_b2());

  ModeState<Scalar> coherent = verify * merged;
  check_stage(coherent, "HWP b2");
  // PBS4 transmits merged-path H to D2 and reflects V to D3; readout is
  // taken directly from those two modes.
  const Scalar d1 = intensity(merged, Path::ArmB, Polarization::H);
  Scalar d2 = intensity(coherent, Path::Merged, Polarization::H);
  Scalar d3 = intensity(coherent, Path::Merged, Polarization::V);

  const Scalar e = noise.error_rate();
  if (e > Scalar(0)) {
    ModeState<Scalar> from_a = ModeState<Scalar>::Zero();
    ModeState<Scalar> from_split = ModeState<Scalar>::Zero();
    const int mh = mode_index(Path::Merged, Polarization::H);
    const int mv = mode_index(Path::Merged, Polarization::V);
    from_a(mh) = merged(mh);
    from_split(mv) = merged(mv);
    from_a = verify * from_a;
    from_split = verify * from_split;
    const Scalar inc_d2 = intensity(from_a, Path::Merged, Polarization::H) +
                          intensity(from_split, Path::Merged, Polarization::H);
    const Scalar inc_d3 = intensity(from_a, Path::Merged, Polarization::V) +
                          intensity(from_split, Path::Merged, Polarization::V);
    d2 = (Scalar(1) - e) * d2 + e * inc_d2;
    d3 = (Scalar(1) - e) * d3 + e * inc_d3;
  }
  return {d1, d2, d3};
}

/// Largest tolerable error rate for punishment R: sqrt(2 / R^3).
template <typename Scalar>
Scalar error_threshold(const GameConfig<Scalar>& config) {
  using std::sqrt;
  const Scalar r = config.punishment();
  return sqrt(Scalar(2) / (r * r * r));
}

/// Largest R the given error rate supports, (2 / e^2)^(1/3). An error-free
/// machine places no bound on R and yields nullopt.
template <typename Scalar>
std::optional<Scalar> max_punishment(const NoiseModel<Scalar>& noise) {
  using std::cbrt;
  const Scalar e = noise.error_rate();
  if (e == Scalar(0)) return std::nullopt;
  return cbrt(Scalar(2) / (e * e));
}

}  // namespace qgamble
