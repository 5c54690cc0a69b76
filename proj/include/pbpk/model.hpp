#pragma once

// Four-compartment permeability-limited brain model: parameter sets, the
// 4x4 rate matrix and the right-hand side of the mass-balance equations.
//
// Compartments are always ordered (brain blood, brain mass, cranial CSF,
// spinal CSF). Parameter structs are templated on the scalar so the same
// equations run on doubles (forward solvers, DE) and on tape variables
// (PINN residual loss).

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace pbpk {

class PlasmaProfile;

inline constexpr std::size_t kCompartments = 4;

inline constexpr std::array<std::string_view, kCompartments> kCompartmentNames = {
    "Cbb", "Cbm", "Cccsf", "Cscsf"};

template <typename T>
struct BasicSystemParams {
  // volumes (L)
  T Vbb = T(0.064952435);
  T Vbm = T(1.104115461);
  T Vccsf = T(0.103984624);
  T Vscsf = T(0.025996156);
  // flows (L/h)
  T Qbrain = T(38.0);
  T Qcsink = T(0.01277633);
  T Qssink = T(0.007761342);
  T QbulkBC = T(0.005164106);
  T QbulkCB = T(0.005164106);  // carried for completeness, not part of the equations
  T Qsout = T(0.007489995);
  T Qsin = T(0.015251337);
  // permeability-surface products (L/h)
  T PSB = T(135.0);
  T PSC = T(67.5);
  T PSE = T(300.0);
};

template <typename T>
struct BasicDrugParams {
  // clearances (L/h)
  T CLBin = T(0.0);
  T CLBout = T(110.0);
  T CLCin = T(11.9);
  T CLCout = T(0.0);
  T CLmet = T(0.0);
  // unbound fractions
  T fubb = T(0.125);
  T fubm = T(0.044);
  T fuccsf = T(1.0);
  // unionized fractions
  T lam_bb = T(0.033);
  T lam_bm = T(0.017);
  T lam_ccsf = T(0.026);
};

using SystemParams = BasicSystemParams<double>;
using DrugParams = BasicDrugParams<double>;

/// Identifiers for all 25 model constants, system parameters first.
enum class ParamId : int {
  Vbb, Vbm, Vccsf, Vscsf,
  Qbrain, Qcsink, Qssink, QbulkBC, QbulkCB, Qsout, Qsin,
  PSB, PSC, PSE,
  CLBin, CLBout, CLCin, CLCout, CLmet,
  fubb, fubm, fuccsf,
  lam_bb, lam_bm, lam_ccsf,
};

inline constexpr std::size_t kParamCount = 25;

enum class ParamKind { Volume, Flow, Permeability, Clearance, Fraction };

struct ParamInfo {
  ParamId id;
  std::string_view name;
  ParamKind kind;
};

const std::array<ParamInfo, kParamCount>& param_table();
std::optional<ParamId> param_from_name(std::string_view name);
std::string_view param_name(ParamId id);
ParamKind param_kind(ParamId id);

template <typename T>
struct BasicModelParams {
  BasicSystemParams<T> sys;
  BasicDrugParams<T> drug;

  T& operator[](ParamId id) { return field(*this, id); }
  const T& operator[](ParamId id) const { return field(const_cast<BasicModelParams&>(*this), id); }

 private:
  static T& field(BasicModelParams& p, ParamId id) {
    switch (id) {
      case ParamId::Vbb: return p.sys.Vbb;
      case ParamId::Vbm: return p.sys.Vbm;
      case ParamId::Vccsf: return p.sys.Vccsf;
      case ParamId::Vscsf: return p.sys.Vscsf;
      case ParamId::Qbrain: return p.sys.Qbrain;
      case ParamId::Qcsink: return p.sys.Qcsink;
      case ParamId::Qssink: return p.sys.Qssink;
      case ParamId::QbulkBC: return p.sys.QbulkBC;
      case ParamId::QbulkCB: return p.sys.QbulkCB;
      case ParamId::Qsout: return p.sys.Qsout;
      case ParamId::Qsin: return p.sys.Qsin;
      case ParamId::PSB: return p.sys.PSB;
      case ParamId::PSC: return p.sys.PSC;
      case ParamId::PSE: return p.sys.PSE;
      case ParamId::CLBin: return p.drug.CLBin;
      case ParamId::CLBout: return p.drug.CLBout;
      case ParamId::CLCin: return p.drug.CLCin;
      case ParamId::CLCout: return p.drug.CLCout;
      case ParamId::CLmet: return p.drug.CLmet;
      case ParamId::fubb: return p.drug.fubb;
      case ParamId::fubm: return p.drug.fubm;
      case ParamId::fuccsf: return p.drug.fuccsf;
      case ParamId::lam_bb: return p.drug.lam_bb;
      case ParamId::lam_bm: return p.drug.lam_bm;
      case ParamId::lam_ccsf: return p.drug.lam_ccsf;
    }
    return p.sys.Vbb;  // unreachable
  }
};

using ModelParams = BasicModelParams<double>;

/// Throws std::invalid_argument when a parameter violates its physical range.
void validate(const ModelParams& params);

/// PaperLiteral follows the printed balance equations exactly. MassConsistent
/// turns the blood-side CLBin term into an efflux and reverses the sign of the
/// spinal-to-cranial CSF return flow so the CSF loop conserves mass.
enum class ModelVariant { PaperLiteral, MassConsistent };

std::string_view variant_name(ModelVariant v);
std::optional<ModelVariant> variant_from_name(std::string_view name);

template <typename T>
using State = std::array<T, kCompartments>;

using ConcentrationState = State<double>;

template <typename T>
using RateMatrix = std::array<std::array<T, kCompartments>, kCompartments>;

/// Rate coefficients (1/h) such that dY/dt = A Y + forcing/Vbb e1.
struct SystemMatrix {
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();

  double operator()(int row, int col) const { return a(row, col); }
};

// ---------------------------------------------------------------------------
// Equations

/// Right-hand side written term by term from the four balance equations.
/// `c_art` is the arterial plasma concentration at the evaluation time.
template <typename T, typename S>
State<S> rhs_terms(const S& c_art, const State<S>& y, const BasicModelParams<T>& p,
                   ModelVariant variant) {
  const auto& s = p.sys;
  const auto& d = p.drug;
  const S& cbb = y[0];
  const S& cbm = y[1];
  const S& cccsf = y[2];
  const S& cscsf = y[3];

  const T clb_in_blood_sign = variant == ModelVariant::PaperLiteral ? T(1.0) : T(-1.0);
  const T qsout_cranial_sign = variant == ModelVariant::PaperLiteral ? T(-1.0) : T(1.0);

  S blood = s.Qbrain * (c_art - cbb)
          + s.PSB * (d.lam_bm * d.fubm * cbm - d.lam_bb * d.fubb * cbb)
          + clb_in_blood_sign * d.CLBin * d.fubb * cbb
          + d.CLBout * d.fubm * cbm
          + s.PSC * (d.lam_ccsf * d.fuccsf * cccsf - d.lam_bb * d.fubb * cbb)
          - d.CLCin * d.fubb * cbb
          + d.CLCout * d.fuccsf * cccsf
          + s.Qcsink * cccsf
          + s.Qssink * cscsf;

  S mass = s.PSB * (d.lam_bb * d.fubb * cbb - d.lam_bm * d.fubm * cbm)
         + d.CLBin * d.fubb * cbb
         - d.CLBout * d.fubm * cbm
         - s.QbulkBC * cbm
         + s.PSE * (d.lam_ccsf * d.fuccsf * cccsf - d.lam_bm * d.fubm * cbm)
         - d.CLmet * cbm;

  S cranial = s.PSC * (d.lam_bb * d.fubb * cbb - d.lam_ccsf * d.fuccsf * cccsf)
            + d.CLCin * d.fubb * cbb
            - d.CLCout * d.fuccsf * cccsf
            + qsout_cranial_sign * s.Qsout * cscsf
            + s.PSE * (d.lam_bm * d.fubm * cbm - d.lam_ccsf * d.fuccsf * cccsf)
            - s.Qsin * cccsf
            - s.Qcsink * cccsf;

  S spinal = s.Qsin * cccsf - s.Qsout * cscsf - s.Qssink * cscsf;

  return {blood / s.Vbb, mass / s.Vbm, cranial / s.Vccsf, spinal / s.Vscsf};
}

/// Rate matrix A(theta) derived coefficient by coefficient from the same
/// equations. Row i holds the coefficients of compartment i.
template <typename T>
RateMatrix<T> rate_matrix(const BasicModelParams<T>& p, ModelVariant variant) {
  const auto& s = p.sys;
  const auto& d = p.drug;
  const T clb_in_blood_sign = variant == ModelVariant::PaperLiteral ? T(1.0) : T(-1.0);
  const T qsout_cranial_sign = variant == ModelVariant::PaperLiteral ? T(-1.0) : T(1.0);
  const T zero(0.0);

  RateMatrix<T> a;
  a[0][0] = -(s.Qbrain + s.PSB * d.lam_bb * d.fubb - clb_in_blood_sign * d.CLBin * d.fubb
              + s.PSC * d.lam_bb * d.fubb + d.CLCin * d.fubb) / s.Vbb;
  a[0][1] = (s.PSB * d.lam_bm * d.fubm + d.CLBout * d.fubm) / s.Vbb;
  a[0][2] = (s.PSC * d.lam_ccsf * d.fuccsf + d.CLCout * d.fuccsf + s.Qcsink) / s.Vbb;
  a[0][3] = s.Qssink / s.Vbb;

  a[1][0] = (s.PSB * d.lam_bb * d.fubb + d.CLBin * d.fubb) / s.Vbm;
  a[1][1] = -(s.PSB * d.lam_bm * d.fubm + d.CLBout * d.fubm + s.QbulkBC
              + s.PSE * d.lam_bm * d.fubm + d.CLmet) / s.Vbm;
  a[1][2] = (s.PSE * d.lam_ccsf * d.fuccsf) / s.Vbm;
  a[1][3] = zero;

  a[2][0] = (s.PSC * d.lam_bb * d.fubb + d.CLCin * d.fubb) / s.Vccsf;
  a[2][1] = (s.PSE * d.lam_bm * d.fubm) / s.Vccsf;
  a[2][2] = -(s.PSC * d.lam_ccsf * d.fuccsf + d.CLCout * d.fuccsf + s.PSE * d.lam_ccsf * d.fuccsf
              + s.Qsin + s.Qcsink) / s.Vccsf;
  a[2][3] = qsout_cranial_sign * s.Qsout / s.Vccsf;

  a[3][0] = zero;
  a[3][1] = zero;
  a[3][2] = s.Qsin / s.Vscsf;
  a[3][3] = -(s.Qsout + s.Qssink) / s.Vscsf;
  return a;
}

SystemMatrix assemble_matrix(const SystemParams& sys, const DrugParams& drug,
                             ModelVariant variant = ModelVariant::PaperLiteral);

/// Qbrain * C_art(t) with clamped linear interpolation of the plasma samples.
double forcing(double t, const SystemParams& sys, const PlasmaProfile& plasma);

ConcentrationState rhs(double t, const ConcentrationState& y, const SystemParams& sys,
                       const DrugParams& drug, const PlasmaProfile& plasma,
                       ModelVariant variant = ModelVariant::PaperLiteral);

}  // namespace pbpk
