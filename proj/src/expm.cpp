#include "pbpk/expm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pbpk {

namespace {

// Pade(13) numerator coefficients.
constexpr double kB[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                         1187353796428800.0,  129060195264000.0,   10559470521600.0,
                         670442572800.0,      33522128640.0,       1323241920.0,
                         40840800.0,          960960.0,            16380.0,
                         182.0,               1.0};

// Largest 1-norms for which the lower-order approximants reach unit roundoff.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

double norm1(const Eigen::MatrixXd& a) { return a.cwiseAbs().colwise().sum().maxCoeff(); }

Eigen::MatrixXd solve_pade(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
  // exp(A) ~= (V - U)^{-1} (V + U)
  return (v - u).partialPivLu().solve(v + u);
}

Eigen::MatrixXd pade_low(const Eigen::MatrixXd& a, int degree) {
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  static constexpr double b3[] = {120.0, 60.0, 12.0, 1.0};
  static constexpr double b5[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
  static constexpr double b7[] = {17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0};
  static constexpr double b9[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                                  2162160.0,     110880.0,     3960.0,       90.0,        1.0};
  const double* b = degree == 3 ? b3 : degree == 5 ? b5 : degree == 7 ? b7 : b9;

  const Eigen::MatrixXd a2 = a * a;
  Eigen::MatrixXd power = id;
  Eigen::MatrixXd u_inner = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k <= degree / 2; ++k) {
    u_inner += b[2 * k + 1] * power;
    v += b[2 * k] * power;
    power = power * a2;
  }
  return solve_pade(a * u_inner, v);
}

}  // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("expm: matrix must be square");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;
  if (!a.allFinite()) throw std::invalid_argument("expm: matrix has non-finite entries");

  const double norm = norm1(a);
  if (norm <= kTheta3) return pade_low(a, 3);
  if (norm <= kTheta5) return pade_low(a, 5);
  if (norm <= kTheta7) return pade_low(a, 7);
  if (norm <= kTheta9) return pade_low(a, 9);

  int s = 0;
  if (norm > kTheta13) s = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
  const Eigen::MatrixXd as = a / std::ldexp(1.0, s);

  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd a2 = as * as;
  const Eigen::MatrixXd a4 = a2 * a2;
  const Eigen::MatrixXd a6 = a4 * a2;

  const Eigen::MatrixXd u =
      as * (a6 * (kB[13] * a6 + kB[11] * a4 + kB[9] * a2) + kB[7] * a6 + kB[5] * a4 + kB[3] * a2 + kB[1] * id);
  const Eigen::MatrixXd v =
      a6 * (kB[12] * a6 + kB[10] * a4 + kB[8] * a2) + kB[6] * a6 + kB[4] * a4 + kB[2] * a2 + kB[0] * id;

  Eigen::MatrixXd r = solve_pade(u, v);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

}  // namespace pbpk
