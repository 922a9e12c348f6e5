// bshift: build reduction chains, run the finitary isomorphism on sampled
// configurations, and run the acceptance suite.
//
// Exit codes: 0 all requested checks pass, 1 a check failed, 2 bad input.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bshift/acceptance.hpp"
#include "bshift/json_io.hpp"
#include "bshift/run_config.hpp"

using namespace bshift;
using io::json;

namespace {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool is_input_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::IoError:
    case ErrorCode::InvalidVector:
    case ErrorCode::LabelCollision:
    case ErrorCode::EntropyMismatch:
    case ErrorCode::TrivialSpace:
    case ErrorCode::NotDisjoint:
    case ErrorCode::MassMismatch:
    case ErrorCode::SpecMismatch:
      return true;
    default:
      return false;
  }
}

/// Flag text to the JSON value the config key expects.
json flag_value(const std::string& key, const std::string& raw) {
  static const std::set<std::string> text{"group", "code", "seed", "out"};
  if (text.count(key)) return raw;
  if ((key == "lambda" || key == "kappa") && (raw.empty() || raw.front() != '{')) return raw;
  if (key == "p_marked" || key == "p_filler" || key == "criteria" || key == "marker_radii") {
    if (!raw.empty() && raw.front() == '[') return json::parse(raw, nullptr, false);
    json list = json::array();
    std::stringstream in(raw);
    for (std::string item; std::getline(in, item, ',');) {
      if (key == "p_marked" || key == "p_filler") {
        list.push_back(item);
      } else {
        const auto v = json::parse(item, nullptr, false);
        list.push_back(v.is_discarded() ? json(item) : v);
      }
    }
    return list;
  }
  const auto v = json::parse(raw, nullptr, false);
  return v.is_discarded() ? json(raw) : v;
}

/// --config plus one flag per config key; flags override the file.
struct Settings {
  std::string config_file;
  std::map<std::string, std::string> flags;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "JSON config file");
    for (const auto& key : RunConfig::keys()) {
      std::string names = "--" + key;
      auto dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key) names += ",--" + dashed;
      app->add_option(names, flags[key], "overrides \"" + key + "\"");
    }
  }

  RunConfig load() const {
    RunConfig c;
    if (!config_file.empty()) c.apply(io::read_json_file(config_file), config_file);
    json over = json::object();
    for (const auto& [key, raw] : flags)
      if (!raw.empty()) over[key] = flag_value(key, raw);
    c.apply(over, "flags");
    c.validate();
    if (c.threads) thread_count() = c.threads;
    return c;
  }
};

void emit(const RunConfig& c, const std::string& text) {
  if (c.out.empty())
    std::cout << text;
  else
    io::write_text_file(c.out, text);
}

// ---- commands ------------------------------------------------------------------

int cmd_entropy(const std::string& path) {
  const auto v = io::read_probvec(path);
  const double h = shannon_entropy(v);
  std::printf("%.6f nats\n%.6f bits\n", h, h / std::log(2.0));
  return 0;
}

int cmd_chain(const std::string& a, const std::string& b, const Settings& s) {
  const auto c = s.load();
  const auto chain = build_chain(io::read_probvec(a), io::read_probvec(b), c.gamma_order);
  const auto j = io::to_json(chain);
  emit(c, j.dump(2) + "\n");
  bool ok = chain.spaces.size() <= 6;
  for (const auto& w : j["witnesses"]) ok = ok && w["pass"].get<bool>();
  std::fprintf(stderr, "chain of %zu spaces, %zu links: %s\n", chain.spaces.size(), chain.witnesses.size(),
               ok ? "all links verify" : "VERIFICATION FAILED");
  return ok ? 0 : 1;
}

std::string cell(const Partial<Symbol>& s) { return s ? label_of(*s) : std::string(to_string(s.reason())); }

int cmd_simulate(const Settings& s) {
  const auto c = s.load();
  const auto iso = c.iso();
  const auto& g = iso->spec;
  struct Rows {
    std::string csv;
    std::size_t defined = 0, cells = 0, mismatches = 0;
  };
  const auto rows = parallel_map(c.samples, [&](std::size_t i) {
    Rows r;
    const auto seed = c.seed.derive(i);
    const LazyConfiguration x(g, iso->witness.left, seed);
    const auto z = theta(x, iso->witness.p_set);
    const PiImage<LazyConfiguration> y(iso, x);
    const auto row = [&](std::size_t pos, const GroupElement& at, const char* stage, const std::string& value) {
      r.csv += seed.hex() + "," + std::to_string(pos) + ",\"" + g.to_string(at) + "\"," + stage + "," + value + "\n";
    };
    for (std::size_t p = 0; p < c.positions; ++p) {
      const auto at = g.enumerate(p);
      row(p, at, "x", label_of(x.value_at(at)));
      row(p, at, "theta", cell(z.at(at)));
      const auto v = v_lift(*iso, x, at);
      row(p, at, "V", v ? (*v ? "1" : "0") : std::string(to_string(v.reason())));
      if (v && *v) {
        const auto t = t_lift(*iso, x, at, 1);
        row(p, at, "T", t ? "\"" + g.to_string(g.mul(at, g.inv(*t))) + "\"" : std::string(to_string(t.reason())));
      }
      const auto pi = y.at(at);
      row(p, at, "pi", cell(pi));
      const auto back = apply_pi_inverse(*iso, y, at);
      row(p, at, "pi_inverse", cell(back));
      ++r.cells;
      if (pi && back) {
        ++r.defined;
        if (*back != x.value_at(at)) ++r.mismatches;
      }
    }
    return r;
  });
  std::string csv = "seed,position,element,stage,value\n";
  std::size_t defined = 0, cells = 0, mismatches = 0;
  for (const auto& r : rows) {
    csv += r.csv;
    defined += r.defined, cells += r.cells, mismatches += r.mismatches;
  }
  emit(c, csv);
  std::fprintf(stderr, "%zu samples x %zu positions: %zu round trips defined, %zu mismatches\n", c.samples,
               c.positions, defined, mismatches);
  return mismatches == 0 && defined > 0 ? 0 : 1;
}

int cmd_verify(const Settings& s, bool json_out, bool details) {
  const auto c = s.load();
  const auto results = acceptance::run(c.acceptance_config(), c.criteria, [&](const acceptance::CriterionResult& r) {
    std::fprintf(stderr, "%s", io::summary({r}, details).c_str());
  });
  const auto report = io::to_json(results);
  if (!c.out.empty()) io::write_text_file(c.out, report.dump(2) + "\n");
  if (json_out) std::cout << report.dump(2) << "\n";
  else std::cout << io::summary(results, false);
  return report["pass"].get<bool>() ? 0 : 1;
}

int demo_running(const Settings& s) {
  auto c = s.load();
  const auto iso = c.iso();
  const auto& w = iso->witness;
  std::printf("lambda = %s\nkappa  = %s\n", io::to_json(w.left).dump().c_str(), io::to_json(w.right).dump().c_str());
  std::printf("H(lambda) = %.9f  H(kappa) = %.9f nats\n", shannon_entropy(w.left), shannon_entropy(w.right));
  std::printf("P mass under lambda = %.6f, under kappa = %.6f\n", w.certificate.p_mass_left, w.certificate.p_mass_right);
  std::printf("A and B spaces: %zu patterns each, H(A) = %.9f, H(B) = %.9f\n", iso->ab.a.space.size(),
              iso->ab.a_entropy(), iso->ab.b_entropy());
  const auto report = verify_witness(w);
  for (const auto& ch : report.checks)
    std::printf("  witness check %-22s %s (residual %.3g)\n", ch.name.c_str(), ch.pass ? "ok" : "FAIL", ch.residual);

  const auto& g = iso->spec;
  const LazyConfiguration x(g, w.left, c.seed);
  std::printf("\npi(x) on the first %zu elements of %s (code %s):\n", c.positions, g.name().c_str(),
              iso->zeta.name().c_str());
  const PiImage<LazyConfiguration> y(iso, x);
  for (std::size_t p = 0; p < c.positions; ++p) {
    const auto at = g.enumerate(p);
    std::printf("  %-12s x=%s  theta=%s  pi=%s\n", g.to_string(at).c_str(), label_of(x.value_at(at)).c_str(),
                cell(theta(x, w.p_set).at(at)).c_str(), cell(y.at(at)).c_str());
  }
  auto cfg = c.acceptance_config();
  cfg.exact_samples = std::min<std::size_t>(cfg.exact_samples, 200);
  cfg.gof_samples = std::min<std::size_t>(cfg.gof_samples, 10000);
  cfg.trace_configs = std::min<std::size_t>(cfg.trace_configs, 20);
  const auto r = acceptance::pi_route(6, "pi on the running pair", iso, w.left, w.right, cfg, c.code == "shift");
  std::printf("\n%s", io::summary({r}, true).c_str());
  return report.pass() && r.pass() ? 0 : 1;
}

int demo_meshalkin(const Settings& s) {
  const auto c = s.load();
  const auto m = meshalkin_code();
  const auto z = GroupSpec::integers();
  const LazyConfiguration x(z, m.source(), c.seed);
  const ZOracle q = [&](std::int64_t n) -> Partial<Symbol> { return x.value_at(z.integer(n)); };
  const ZOracle y = [&](std::int64_t n) { return m.encode_at(q, n).symbol; };
  std::printf("  n    x    y=encode  lookahead  decode(y)\n");
  bool ok = true;
  for (std::int64_t n = -8; n <= 8; ++n) {
    const auto e = m.encode_at(q, n);
    const auto d = m.decode_at(y, n).symbol;
    ok = ok && (!d || *d == *q(n));
    std::printf("%3lld  %3s  %8s  %9lld  %9s\n", static_cast<long long>(n), label_of(*q(n)).c_str(), cell(e.symbol).c_str(),
                static_cast<long long>(e.lookahead), cell(d).c_str());
  }
  auto cfg = c.acceptance_config();
  cfg.meshalkin_windows = std::min<std::size_t>(cfg.meshalkin_windows, 2000);
  cfg.gof_samples = std::min<std::size_t>(cfg.gof_samples, 20000);
  const auto r = acceptance::meshalkin(cfg);
  std::printf("\n%s", io::summary({r}, true).c_str());
  return ok && r.pass() ? 0 : 1;
}

int demo_stepin(const Settings& s) {
  const auto c = s.load();
  auto cfg = c.acceptance_config();
  cfg.exact_samples = std::min<std::size_t>(cfg.exact_samples, 300);
  cfg.gof_samples = std::min<std::size_t>(cfg.gof_samples, 10000);
  const auto psi = meshalkin_code();
  const auto z = GroupSpec::integers();
  const LazyConfiguration x(z, psi.source(), c.seed);
  std::printf("pi(x)(g) = psi(q(g^-1 x))(0) with u = 1 on Z:\n");
  for (std::int64_t n = -5; n <= 5; ++n)
    std::printf("  g=%3lld  x=%s  pi=%s\n", static_cast<long long>(n), label_of(x.value_at(z.integer(n))).c_str(),
                cell(stepin_pi(z.integer(1), psi, x, z.integer(n)).symbol).c_str());
  const auto r = acceptance::stepin(cfg);
  std::printf("\n%s", io::summary({r}, true).c_str());
  return r.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finitary isomorphisms of Bernoulli shifts over groups with a finite subgroup"};
  app.require_subcommand(1);

  std::string vec, vec_a, vec_b, pair = "running";
  bool json_out = false, details = false;
  Settings chain_s, sim_s, verify_s, demo_s;

  auto* entropy = app.add_subcommand("entropy", "Shannon entropy of a vector file");
  entropy->add_option("vector", vec, "JSON vector file")->required();

  auto* chain = app.add_subcommand("chain", "reduction chain between two equal-entropy vectors");
  chain->add_option("lambda_file", vec_a, "JSON vector file")->required();
  chain->add_option("kappa_file", vec_b, "JSON vector file")->required();
  chain_s.attach(chain);

  auto* simulate = app.add_subcommand("simulate", "CSV traces of theta, V, T and pi on sampled configurations");
  sim_s.attach(simulate);

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");
  verify->add_flag("--json", json_out, "print the JSON report instead of the table");
  verify->add_flag("--details", details, "show every check while running");
  verify_s.attach(verify);

  auto* demo = app.add_subcommand("demo", "canned end-to-end scenarios");
  demo->add_option("--pair", pair, "running | meshalkin | stepin")
      ->check(CLI::IsMember({"running", "meshalkin", "stepin"}));
  demo_s.attach(demo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*entropy) return cmd_entropy(vec);
    if (*chain) return cmd_chain(vec_a, vec_b, chain_s);
    if (*simulate) return cmd_simulate(sim_s);
    if (*verify) return cmd_verify(verify_s, json_out, details);
    if (*demo) {
      if (pair == "meshalkin") return demo_meshalkin(demo_s);
      if (pair == "stepin") return demo_stepin(demo_s);
      return demo_running(demo_s);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return is_input_error(e.code()) ? 2 : 1;
  }
  return 2;
}
