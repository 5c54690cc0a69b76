#include <doctest.h>

#include <cmath>
#include <random>

#include "pbpk/model.hpp"
#include "pbpk/series.hpp"

using namespace pbpk;

namespace {

ModelParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  std::uniform_real_distribution<double> frac(0.01, 1.0);
  ModelParams p;
  for (const auto& info : param_table()) {
    if (info.kind == ParamKind::Fraction) {
      p[info.id] = frac(rng);
    } else {
      const double ref = p[info.id];
      p[info.id] = ref > 0.0 ? ref * scale(rng) : scale(rng);
    }
  }
  return p;
}

}  // namespace

TEST_CASE("default parameters reproduce the reference tables") {
  const ModelParams p;
  CHECK(p.sys.Vbb == 0.064952435);
  CHECK(p.sys.Vscsf == 0.025996156);
  CHECK(p.sys.Qbrain == 38.0);
  CHECK(p.drug.CLBout == 110.0);
  CHECK(p.drug.lam_ccsf == 0.026);
  CHECK(param_table().size() == 25);
  CHECK_NOTHROW(validate(p));
}

TEST_CASE("parameter names resolve case-insensitively") {
  CHECK(param_from_name("Vbb") == ParamId::Vbb);
  CHECK(param_from_name("vscsf") == ParamId::Vscsf);
  CHECK(param_from_name("lam_ccsf") == ParamId::lam_ccsf);
  CHECK_FALSE(param_from_name("Vnope").has_value());
  for (const auto& info : param_table()) CHECK(param_from_name(param_name(info.id)) == info.id);
}

TEST_CASE("validate rejects non-physical values") {
  ModelParams p;
  p.sys.Vbb = 0.0;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
  p = ModelParams{};
  p.drug.fubb = 1.5;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
  p = ModelParams{};
  p.sys.Qsout = -1.0;
  CHECK_THROWS_AS(validate(p), std::invalid_argument);
}

TEST_CASE("matrix entries from hand arithmetic") {
  const ModelParams p;
  const auto a = assemble_matrix(p.sys, p.drug).a;
  CHECK(a(3, 3) == doctest::Approx(-(0.007489995 + 0.007761342) / 0.025996156).epsilon(1e-14));
  CHECK(a(3, 3) == doctest::Approx(-0.586676).epsilon(1e-6));
  CHECK(a(3, 0) == 0.0);
  CHECK(a(3, 1) == 0.0);
  CHECK(a(0, 3) == doctest::Approx(0.007761342 / 0.064952435).epsilon(1e-14));
  CHECK(a(2, 3) == doctest::Approx(-0.007489995 / 0.103984624).epsilon(1e-14));
  for (int i = 0; i < 4; ++i) CHECK(a(i, i) < 0.0);
}

TEST_CASE("spinal flow balance makes the last row sum to zero") {
  const ModelParams p;
  CHECK(p.sys.Qsin == doctest::Approx(p.sys.Qsout + p.sys.Qssink).epsilon(1e-15));
  const auto a = assemble_matrix(p.sys, p.drug).a;
  CHECK(std::abs(a(3, 2) + a(3, 3)) < 1e-12);
}

TEST_CASE("zero transport gives a zero matrix") {
  ModelParams p;
  for (const auto& info : param_table()) {
    p[info.id] = info.kind == ParamKind::Volume ? 1.0 : 0.0;
  }
  const auto a = assemble_matrix(p.sys, p.drug).a;
  CHECK(a.isZero(0.0));
}

TEST_CASE("rhs examples") {
  const ModelParams p;
  const auto one = PlasmaProfile::constant(1.0, 0.0, 48.0);
  const auto zero = PlasmaProfile::constant(0.0, 0.0, 48.0);
  const auto r = rhs(1.0, {0, 0, 0, 0}, p.sys, p.drug, one);
  CHECK(r[0] == doctest::Approx(38.0 / 0.064952435).epsilon(1e-14));
  CHECK(r[0] == doctest::Approx(585.04).epsilon(1e-5));
  CHECK(r[1] == 0.0);
  CHECK(r[2] == 0.0);
  CHECK(r[3] == 0.0);
  const auto z = rhs(1.0, {0, 0, 0, 0}, p.sys, p.drug, zero);
  for (double v : z) CHECK(v == 0.0);
  const auto s = rhs(1.0, {0, 0, 0, 1}, p.sys, p.drug, zero);
  CHECK(s[3] == doctest::Approx(-0.586676).epsilon(1e-6));
}

TEST_CASE("forcing is Qbrain times the interpolated plasma") {
  ModelParams p;
  CHECK(forcing(3.0, p.sys, PlasmaProfile::constant(1.0, 0.0, 48.0)) == 38.0);
  CHECK(forcing(3.0, p.sys, PlasmaProfile::constant(0.05, 0.0, 48.0)) == doctest::Approx(1.9).epsilon(1e-15));
  p.sys.Qbrain = 0.0;
  CHECK(forcing(3.0, p.sys, PlasmaProfile::constant(0.05, 0.0, 48.0)) == 0.0);
}

TEST_CASE("term-by-term rhs equals the matrix form for random draws") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> conc(0.0, 2.0);
  for (auto variant : {ModelVariant::PaperLiteral, ModelVariant::MassConsistent}) {
    for (int draw = 0; draw < 1000; ++draw) {
      const ModelParams p = random_params(rng);
      const ConcentrationState y{conc(rng), conc(rng), conc(rng), conc(rng)};
      const double c_art = conc(rng);
      const auto terms = rhs_terms(c_art, y, p, variant);
      const auto a = assemble_matrix(p.sys, p.drug, variant).a;
      const Eigen::Vector4d yv(y[0], y[1], y[2], y[3]);
      Eigen::Vector4d expected = a * yv;
      expected(0) += p.sys.Qbrain * c_art / p.sys.Vbb;
      for (int k = 0; k < 4; ++k) {
        const double scale = std::max(1.0, std::abs(expected(k)));
        CHECK(std::abs(terms[static_cast<std::size_t>(k)] - expected(k)) / scale < 1e-12);
      }
    }
  }
}

TEST_CASE("variants differ only in the CLBin and Qsout couplings") {
  std::mt19937_64 rng(7);
  for (int draw = 0; draw < 50; ++draw) {
    const ModelParams p = random_params(rng);
    const auto lit = assemble_matrix(p.sys, p.drug, ModelVariant::PaperLiteral).a;
    const auto mc = assemble_matrix(p.sys, p.drug, ModelVariant::MassConsistent).a;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if ((i == 0 && j == 0) || (i == 2 && j == 3)) continue;
        CHECK(lit(i, j) == mc(i, j));
      }
    }
    CHECK(mc(2, 3) == doctest::Approx(-lit(2, 3)).epsilon(1e-15));
    CHECK(mc(0, 0) == doctest::Approx(lit(0, 0) - 2.0 * p.drug.CLBin * p.drug.fubb / p.sys.Vbb).epsilon(1e-12));
  }
}

TEST_CASE("assemble_matrix is deterministic") {
  const ModelParams p;
  const auto a = assemble_matrix(p.sys, p.drug).a;
  const auto b = assemble_matrix(p.sys, p.drug).a;
  CHECK((a.array() == b.array()).all());
}

TEST_CASE("variant names") {
  CHECK(variant_from_name("paper-literal") == ModelVariant::PaperLiteral);
  CHECK(variant_from_name("mass-consistent") == ModelVariant::MassConsistent);
  CHECK_FALSE(variant_from_name("other").has_value());
}
