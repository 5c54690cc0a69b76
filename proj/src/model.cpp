#include "pbpk/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pbpk/series.hpp"

namespace pbpk {

namespace {

constexpr std::array<ParamInfo, kParamCount> kParamTable = {{
    {ParamId::Vbb, "Vbb", ParamKind::Volume},
    {ParamId::Vbm, "Vbm", ParamKind::Volume},
    {ParamId::Vccsf, "Vccsf", ParamKind::Volume},
    {ParamId::Vscsf, "Vscsf", ParamKind::Volume},
    {ParamId::Qbrain, "Qbrain", ParamKind::Flow},
    {ParamId::Qcsink, "Qcsink", ParamKind::Flow},
    {ParamId::Qssink, "Qssink", ParamKind::Flow},
    {ParamId::QbulkBC, "QbulkBC", ParamKind::Flow},
    {ParamId::QbulkCB, "QbulkCB", ParamKind::Flow},
    {ParamId::Qsout, "Qsout", ParamKind::Flow},
    {ParamId::Qsin, "Qsin", ParamKind::Flow},
    {ParamId::PSB, "PSB", ParamKind::Permeability},
    {ParamId::PSC, "PSC", ParamKind::Permeability},
    {ParamId::PSE, "PSE", ParamKind::Permeability},
    {ParamId::CLBin, "CLBin", ParamKind::Clearance},
    {ParamId::CLBout, "CLBout", ParamKind::Clearance},
    {ParamId::CLCin, "CLCin", ParamKind::Clearance},
    {ParamId::CLCout, "CLCout", ParamKind::Clearance},
    {ParamId::CLmet, "CLmet", ParamKind::Clearance},
    {ParamId::fubb, "fubb", ParamKind::Fraction},
    {ParamId::fubm, "fubm", ParamKind::Fraction},
    {ParamId::fuccsf, "fuccsf", ParamKind::Fraction},
    {ParamId::lam_bb, "lam_bb", ParamKind::Fraction},
    {ParamId::lam_bm, "lam_bm", ParamKind::Fraction},
    {ParamId::lam_ccsf, "lam_ccsf", ParamKind::Fraction},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

const std::array<ParamInfo, kParamCount>& param_table() { return kParamTable; }

std::optional<ParamId> param_from_name(std::string_view name) {
  for (const auto& info : kParamTable) {
    if (info.name == name) return info.id;
  }
  // accept "lamccsf" style spellings
  for (const auto& info : kParamTable) {
    std::string compact;
    for (char c : info.name) {
      if (c != '_') compact.push_back(c);
    }
    if (iequals(compact, name) || iequals(info.name, name)) return info.id;
  }
  return std::nullopt;
}

std::string_view param_name(ParamId id) { return kParamTable[static_cast<int>(id)].name; }

ParamKind param_kind(ParamId id) { return kParamTable[static_cast<int>(id)].kind; }

void validate(const ModelParams& params) {
  for (const auto& info : kParamTable) {
    const double v = params[info.id];
    const std::string name(info.name);
    if (!std::isfinite(v)) throw std::invalid_argument("parameter " + name + " is not finite");
    switch (info.kind) {
      case ParamKind::Volume:
        if (v <= 0.0) throw std::invalid_argument("volume " + name + " must be positive");
        break;
      case ParamKind::Flow:
      case ParamKind::Clearance:
        if (v < 0.0) throw std::invalid_argument(name + " must be non-negative");
        break;
      case ParamKind::Permeability:
        if (v <= 0.0) throw std::invalid_argument(name + " must be positive");
        break;
      case ParamKind::Fraction:
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("fraction " + name + " must lie in [0, 1]");
        break;
    }
  }
}

std::string_view variant_name(ModelVariant v) {
  return v == ModelVariant::PaperLiteral ? "paper-literal" : "mass-consistent";
}

std::optional<ModelVariant> variant_from_name(std::string_view name) {
  if (iequals(name, "paper-literal") || iequals(name, "PaperLiteral")) return ModelVariant::PaperLiteral;
  if (iequals(name, "mass-consistent") || iequals(name, "MassConsistent")) return ModelVariant::MassConsistent;
  return std::nullopt;
}

SystemMatrix assemble_matrix(const SystemParams& sys, const DrugParams& drug, ModelVariant variant) {
  const ModelParams p{sys, drug};
  const auto a = rate_matrix(p, variant);
  SystemMatrix m;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) m.a(i, j) = a[i][j];
  }
  return m;
}

double forcing(double t, const SystemParams& sys, const PlasmaProfile& plasma) {
  return sys.Qbrain * linear_interp(plasma, t);
}

ConcentrationState rhs(double t, const ConcentrationState& y, const SystemParams& sys,
                       const DrugParams& drug, const PlasmaProfile& plasma, ModelVariant variant) {
  const ModelParams p{sys, drug};
  return rhs_terms(linear_interp(plasma, t), y, p, variant);
}

}  // namespace pbpk
