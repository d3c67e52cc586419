#include "lattheta/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "lattheta/caf.hpp"
#include "lattheta/catalog.hpp"
#include "lattheta/errors.hpp"
#include "lattheta/lattice_io.hpp"
#include "lattheta/theta.hpp"

namespace lattheta {
namespace {

using nlohmann::json;

const std::vector<std::string> kCommands{"theta",    "flatness", "caf-decode",
                                         "caf-surface", "caf-rate", "thm2",
                                         "sumlattice",  "probe",    "catalog",
                                         "validate"};

double parse_number(std::string_view text) {
  double value = 0.0;
  std::string s(text);
  const auto first = s.find_first_not_of(" \t");
  const auto last = s.find_last_not_of(" \t");
  if (first == std::string::npos) fail(ErrorCode::kConfigError, "empty number in grid");
  s = s.substr(first, last - first + 1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    fail(ErrorCode::kConfigError, "not a number: '" + s + "'");
  }
  return value;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string join_values(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_double(v[i]);
  }
  return out;
}

std::string join_values(const RealVector& v) {
  return join_values(std::vector<double>(v.data(), v.data() + v.size()));
}

std::string join_values(const Coeffs& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(v[i]);
  }
  return out;
}

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const RunConfig& config,
            const std::vector<std::string>& columns)
      : os_(os) {
    os_ << "# config: " << config.to_json().dump() << '\n';
    row(columns);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << csv_field(fields[i]);
    }
    os_ << '\n';
  }

  void comment(const std::string& text) { os_ << "# " << text << '\n'; }

 private:
  std::ostream& os_;
};

CatalogEntry resolve_ref(const std::string& ref, std::optional<int> dim) {
  const bool is_file = ref.size() > 5 && ref.substr(ref.size() - 5) == ".json";
  if (!is_file && !std::filesystem::exists(ref)) return resolve(ref, dim);
  const Lattice lattice = load_lattice_spec(ref);
  CatalogEntry e;
  e.name = lattice.name().empty() ? ref : lattice.name();
  e.family = "file";
  e.dim = lattice.dim();
  e.generator = lattice.generator();
  e.lambda1 = minimal_norm(lattice).lambda1;
  e.volume = lattice.volume();
  return e;
}

std::vector<CatalogEntry> resolve_all(const RunConfig& c) {
  std::vector<CatalogEntry> out;
  for (const auto& ref : c.lattices) out.push_back(resolve_ref(ref, c.dim));
  return out;
}

CatalogEntry single_lattice(const RunConfig& c, const std::string& fallback) {
  if (c.lattices.size() > 1) {
    fail(ErrorCode::kConfigError, c.command + " takes a single --lattice");
  }
  const std::string ref = c.lattices.empty() ? fallback : c.lattices.front();
  if (ref.empty()) fail(ErrorCode::kConfigError, c.command + " needs --lattice");
  return resolve_ref(ref, c.dim);
}

std::uint64_t require_seed(const RunConfig& c) {
  if (!c.seed) fail(ErrorCode::kConfigError, c.command + " needs --seed");
  return *c.seed;
}

double require_single_sigma2(const RunConfig& c) {
  if (!c.sigma2) fail(ErrorCode::kConfigError, c.command + " needs --sigma2");
  if (c.sigma2->values.size() != 1) {
    fail(ErrorCode::kConfigError, c.command + " takes a single --sigma2 value");
  }
  const double s = c.sigma2->values.front();
  if (!(s > 0.0)) fail(ErrorCode::kConfigError, "--sigma2 must be > 0");
  return s;
}

// Θ from the closed form when the entry has one, else by enumeration.
double entry_theta(const CatalogEntry& e, const std::optional<Lattice>& lattice,
                   double q) {
  if (e.theta_form) return theta_closed_form(e, q);
  if (!lattice) fail(ErrorCode::kGeneratorUnavailable, "no generator for '" + e.name + "'");
  return theta_exact_value(*lattice, q);
}

std::optional<Lattice> maybe_lattice(const CatalogEntry& e) {
  if (!e.generator) return std::nullopt;
  return e.lattice();
}

NestedCode make_code(const CatalogEntry& e, int scale) {
  if (scale < 1) fail(ErrorCode::kConfigError, "--code-index must be >= 1");
  const Lattice fine = e.lattice();
  return build_nested_code(fine.scaled(scale), fine);
}

double mean_energy_per_dim(const NestedCode& code) {
  double s = 0.0;
  for (const auto& w : code.representatives) s += w.norm();
  return s / (static_cast<double>(code.size()) * code.fine.dim());
}

json entry_json(const CatalogEntry& e, bool with_generator) {
  json j{{"name", e.name},       {"family", e.family}, {"dim", e.dim},
         {"lambda1", e.lambda1}, {"volume", e.volume},
         {"has_generator", e.generator.has_value()}};
  j["theta_form"] = e.theta_form ? json(std::string(to_string(*e.theta_form))) : json();
  j["power_P"] = e.power_P ? json(*e.power_P) : json();
  j["codebook_size"] = e.codebook_size ? json(*e.codebook_size) : json();
  if (with_generator && e.generator) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < e.generator->rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < e.generator->cols(); ++c) row.push_back((*e.generator)(r, c));
      rows.push_back(row);
    }
    j["generator"] = rows;
  }
  return j;
}

// ---------------------------------------------------------------- commands

int cmd_theta(const RunConfig& c, std::ostream& os) {
  const CatalogEntry e = single_lattice(c, "");
  const auto lattice = maybe_lattice(e);
  if (!c.sigma2 == !c.q) {
    fail(ErrorCode::kConfigError, "theta needs exactly one of --sigma2 or --q");
  }
  std::vector<std::string> modes = c.modes;
  if (modes.empty()) modes = {"exact", "approx", "baseline"};
  auto want = [&](const char* m) {
    return std::find(modes.begin(), modes.end(), m) != modes.end();
  };
  for (const auto& m : modes) {
    if (m != "exact" && m != "approx" && m != "baseline") {
      fail(ErrorCode::kConfigError, "unknown theta mode '" + m + "'");
    }
  }
  const auto& grid = c.sigma2 ? c.sigma2->values : c.q->values;
  std::vector<std::vector<std::string>> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    double sigma2 = 0.0, q = 0.0;
    if (c.sigma2) {
      sigma2 = grid[i];
      if (!(sigma2 > 0.0)) fail(ErrorCode::kConfigError, "--sigma2 values must be > 0");
      q = nome_from_sigma2(sigma2);
    } else {
      q = grid[i];
      if (!(q > 0.0 && q < 1.0)) fail(ErrorCode::kConfigError, "--q values must lie in (0, 1)");
      sigma2 = -1.0 / (2.0 * std::log(q));
    }
    std::vector<std::string> row{format_double(sigma2), format_double(q), "", "", "", "",
                                 "", format_double(volume_to_noise_ratio(e.dim, e.volume, sigma2))};
    if (want("exact")) {
      const double t = entry_theta(e, lattice, q);
      row[2] = format_double(t);
      row[5] = format_double(
          flatness_from_theta(e.dim, e.volume, sigma2, t, FlatnessMode::kExact).epsilon);
    }
    if (want("approx")) {
      const double t = theta_approx(e.dim, e.lambda1, e.volume, q).value;
      row[3] = format_double(t);
      row[6] = format_double(
          flatness_from_theta(e.dim, e.volume, sigma2, t, FlatnessMode::kApprox).epsilon);
    }
    if (want("baseline")) row[4] = format_double(truncated_sum_baseline(e, q));
    rows[i] = std::move(row);
  });
  CsvWriter csv(os, c,
                {"sigma2", "q", "theta_exact", "theta_approx", "baseline", "epsilon_exact",
                 "epsilon_approx", "vnr"});
  for (const auto& r : rows) csv.row(r);
  return 0;
}

int cmd_flatness(const RunConfig& c, std::ostream& os) {
  std::vector<CatalogEntry> entries = resolve_all(c);
  if (c.rho_db) {
    if (entries.empty()) {
      if (c.dim == 3) {
        entries = {get("Zn", 3), get("Dn", 3), get("Dn_star", 3), get("Lambda4_3")};
      } else if (c.dim == 4) {
        entries = {get("Zn", 4), get("Dn", 4), get("Lambda3_4"), get("Lambda4_4")};
      } else {
        fail(ErrorCode::kConfigError, "flatness --rho-db needs --lattice or --dim 3|4");
      }
    }
    const auto rows = flatness_comparison(entries, c.rho_db->values);
    CsvWriter csv(os, c, {"lattice", "dim", "power", "rho_db", "sigma2", "epsilon", "vnr"});
    for (const auto& r : rows) {
      csv.row({r.lattice, std::to_string(r.dim), format_double(r.power), format_double(r.rho_db),
               format_double(r.sigma2), format_double(r.epsilon), format_double(r.vnr)});
    }
    return 0;
  }
  if (!c.sigma2) fail(ErrorCode::kConfigError, "flatness needs --sigma2 or --rho-db");
  if (entries.empty()) fail(ErrorCode::kConfigError, "flatness --sigma2 needs --lattice");
  const std::string mode = c.mode.empty() ? "exact" : c.mode;
  if (mode != "exact" && mode != "approx") {
    fail(ErrorCode::kConfigError, "flatness --mode must be exact or approx");
  }
  struct Job {
    std::size_t entry;
    double sigma2;
  };
  std::vector<Job> jobs;
  std::vector<std::optional<Lattice>> lattices;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    lattices.push_back(maybe_lattice(entries[i]));
    for (double s : c.sigma2->values) {
      if (!(s > 0.0)) fail(ErrorCode::kConfigError, "--sigma2 values must be > 0");
      jobs.push_back({i, s});
    }
  }
  std::vector<FlatnessPoint> points(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const auto& e = entries[jobs[i].entry];
    const double q = nome_from_sigma2(jobs[i].sigma2);
    const bool exact = mode == "exact";
    const double t = exact ? entry_theta(e, lattices[jobs[i].entry], q)
                           : theta_approx(e.dim, e.lambda1, e.volume, q).value;
    points[i] = flatness_from_theta(e.dim, e.volume, jobs[i].sigma2, t,
                                    exact ? FlatnessMode::kExact : FlatnessMode::kApprox);
  });
  CsvWriter csv(os, c, {"lattice", "sigma2", "epsilon", "vnr", "theta", "mode"});
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    csv.row({entries[jobs[i].entry].name, format_double(points[i].sigma2),
             format_double(points[i].epsilon), format_double(points[i].vnr),
             format_double(points[i].theta), std::string(to_string(points[i].mode))});
  }
  return 0;
}

DecompositionMode decomposition_mode(const RunConfig& c) {
  return c.mode.empty() ? DecompositionMode::kHnf : decomposition_mode_from_string(c.mode);
}

// Random nonzero coefficient vector with gcd 1 in [-bound, bound]^K.
Coeffs random_gcd_one(std::mt19937_64& rng, int K, int bound) {
  std::uniform_int_distribution<std::int64_t> dist(-bound, bound);
  while (true) {
    Coeffs a(static_cast<std::size_t>(K));
    for (auto& x : a) x = dist(rng);
    if (gcd_of(a) == 1) return a;
  }
}

int cmd_caf_decode(const RunConfig& c, std::ostream& os) {
  const CatalogEntry e = single_lattice(c, "Z1");
  const double sigma2 = require_single_sigma2(c);
  const std::uint64_t seed = require_seed(c);
  if (c.K < 1) fail(ErrorCode::kConfigError, "--K must be >= 1");
  const NestedCode code = make_code(e, c.code_index);
  const std::vector<NestedCode> codes(static_cast<std::size_t>(c.K), code);
  const double rho = mean_energy_per_dim(code) / sigma2;
  const DecompositionMode mode = decomposition_mode(c);
  const int n = e.dim;

  struct Trace {
    std::vector<double> h;
    Coeffs a, truth, decoded;
    double log_metric;
  };
  std::vector<Trace> traces(c.trials);
  parallel_for(c.trials, [&](std::size_t t) {
    auto rng = trial_rng(seed, t);
    Trace tr;
    Coeffs a;
    if (c.integer_channel) {
      a = random_gcd_one(rng, c.K, 2);
      tr.h.assign(a.begin(), a.end());
    } else {
      tr.h = sample_gaussian_vector(static_cast<std::size_t>(c.K), 1.0, rng);
      a = optimal_coeffs(rho, tr.h, c.box).a;
    }
    std::uniform_int_distribution<std::size_t> pick(0, code.size() - 1);
    std::vector<RealVector> words;
    for (int k = 0; k < c.K; ++k) words.push_back(code.representatives[pick(rng)].coords);
    const auto noise_v = sample_gaussian_vector(static_cast<std::size_t>(n), sigma2, rng);
    const RealVector noise = Eigen::Map<const RealVector>(noise_v.data(), n);
    const RealVector y = received_signal(words, tr.h, noise);
    MlDecoder decoder(a, tr.h, codes, DecodeOptions{mode, MetricForm::kDefinition, false});
    RealVector lambda = RealVector::Zero(n);
    for (int k = 0; k < c.K; ++k) lambda += static_cast<double>(a[k]) * words[k];
    tr.truth = decoder.index().lambda_coeffs(lambda);
    const auto result = decoder.decode(y, sigma2);
    tr.decoded = result.lambda_hat.coeffs;
    tr.log_metric = result.log_metric;
    tr.a = std::move(a);
    traces[t] = std::move(tr);
  });
  CsvWriter csv(os, c, {"trial", "h", "a", "lambda_true", "lambda_hat", "correct", "log_metric"});
  std::size_t correct = 0;
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const bool ok = traces[t].truth == traces[t].decoded;
    correct += ok;
    csv.row({std::to_string(t), join_values(traces[t].h), join_values(traces[t].a),
             join_values(traces[t].truth), join_values(traces[t].decoded), ok ? "1" : "0",
             format_double(traces[t].log_metric)});
  }
  csv.comment("correct: " + std::to_string(correct) + "/" + std::to_string(traces.size()));
  return 0;
}

int cmd_caf_surface(const RunConfig& c, std::ostream& os) {
  const CatalogEntry e = single_lattice(c, "Z1");
  const double sigma2 = require_single_sigma2(c);
  const std::uint64_t seed = require_seed(c);
  if (c.K < 1) fail(ErrorCode::kConfigError, "--K must be >= 1");
  const NestedCode code = make_code(e, c.code_index);
  const std::vector<NestedCode> codes(static_cast<std::size_t>(c.K), code);
  const double P = mean_energy_per_dim(code);
  const auto channel = sample_channel(c.K, P, sigma2, seed);
  const Coeffs a = optimal_coeffs(channel.rho, channel.h, c.box).a;
  auto rng = trial_rng(seed, 0);
  std::uniform_int_distribution<std::size_t> pick(0, code.size() - 1);
  std::vector<RealVector> words;
  for (int k = 0; k < c.K; ++k) words.push_back(code.representatives[pick(rng)].coords);
  const auto noise_v = sample_gaussian_vector(static_cast<std::size_t>(e.dim), sigma2, rng);
  const RealVector y =
      received_signal(words, channel.h, Eigen::Map<const RealVector>(noise_v.data(), e.dim));

  MlDecoder definition(a, channel.h, codes, {decomposition_mode(c), MetricForm::kDefinition, true});
  MlDecoder decomposition(a, channel.h, codes,
                          {decomposition_mode(c), MetricForm::kDecomposition, false});
  RealVector lambda = RealVector::Zero(e.dim);
  for (int k = 0; k < c.K; ++k) lambda += static_cast<double>(a[k]) * words[k];
  const Coeffs truth = definition.index().lambda_coeffs(lambda);
  const auto result = definition.decode(y, sigma2);

  CsvWriter csv(os, c, {"lambda", "lambda_coeffs", "log_phi", "phi", "log_phi_decomposition",
                        "is_true", "is_decoded"});
  csv.comment("h: " + join_values(channel.h) + " a: " + join_values(a) +
              " y: " + join_values(y));
  for (const auto& s : *result.metric_profile) {
    const double dec = decomposition.log_phi(s.lambda, y, sigma2);
    csv.row({join_values(s.lambda.coords), join_values(s.lambda.coeffs), format_double(s.log_phi),
             format_double(std::exp(s.log_phi)), format_double(dec),
             s.lambda.coeffs == truth ? "1" : "0",
             s.lambda.coeffs == result.lambda_hat.coeffs ? "1" : "0"});
  }
  return 0;
}

int cmd_caf_rate(const RunConfig& c, std::ostream& os) {
  if (!c.rho_db) fail(ErrorCode::kConfigError, "caf-rate needs --rho-db");
  const std::uint64_t seed = require_seed(c);
  if (c.K < 1) fail(ErrorCode::kConfigError, "--K must be >= 1");
  const auto& grid = c.rho_db->values;
  std::vector<std::vector<double>> rates(grid.size(), std::vector<double>(c.trials));
  std::vector<std::vector<char>> gcd_ok(grid.size(), std::vector<char>(c.trials));
  parallel_for(grid.size() * c.trials, [&](std::size_t job) {
    const std::size_t g = job / c.trials, t = job % c.trials;
    auto rng = trial_rng(seed, t);
    const auto h = sample_gaussian_vector(static_cast<std::size_t>(c.K), 1.0, rng);
    const double rho = std::pow(10.0, grid[g] / 10.0);
    const auto eq = optimal_coeffs(rho, h, c.box);
    rates[g][t] = computation_rate(rho, h, eq.a);
    gcd_ok[g][t] = eq.gcd_flag;
  });
  CsvWriter csv(os, c, {"rho_db", "trials", "mean_rate", "min_rate", "max_rate", "gcd_one_fraction"});
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto& r = rates[g];
    double sum = 0.0;
    for (double x : r) sum += x;
    const auto [mn, mx] = std::minmax_element(r.begin(), r.end());
    const double frac =
        static_cast<double>(std::count(gcd_ok[g].begin(), gcd_ok[g].end(), 1)) / r.size();
    csv.row({format_double(grid[g]), std::to_string(c.trials), format_double(sum / r.size()),
             format_double(*mn), format_double(*mx), format_double(frac)});
  }
  return 0;
}

int cmd_thm2(const RunConfig& c, std::ostream& os) {
  const std::uint64_t seed = require_seed(c);
  std::vector<CatalogEntry> entries = resolve_all(c);
  if (entries.empty()) entries = {get("Zn", 2), get("Dn", 3)};
  std::vector<std::int64_t> scales = c.c.empty() ? std::vector<std::int64_t>{1, 2, 3} : c.c;
  for (auto s : scales) {
    if (s == 0) fail(ErrorCode::kConfigError, "--c values must be nonzero");
  }
  struct Outcome {
    bool degenerate = false;
    ScaledPairResult r;
  };
  std::vector<Outcome> outcomes(c.trials);
  parallel_for(c.trials, [&](std::size_t i) {
    auto rng = trial_rng(seed, i);
    const auto& e = entries[i % entries.size()];
    const std::int64_t scale = scales[(i / entries.size()) % scales.size()];
    const Coeffs a = random_gcd_one(rng, 2, c.box < 1 ? 5 : std::min(c.box, 5));
    const auto h = sample_gaussian_vector(2, 1.0, rng);
    try {
      outcomes[i].r = scaled_pair_equivalence(*e.generator, scale, a, h);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kDegenerate) throw;
      outcomes[i].degenerate = true;
    }
  });
  std::size_t degenerate = 0, equivalent = 0, explicit_match = 0;
  double max_int = 0.0, max_det = 0.0;
  for (const auto& o : outcomes) {
    if (o.degenerate) {
      ++degenerate;
      continue;
    }
    equivalent += o.r.equivalent;
    explicit_match += o.r.explicit_match;
    max_int = std::max(max_int, o.r.integrality_error);
    max_det = std::max(max_det, o.r.det_error);
  }
  const std::size_t non_degenerate = c.trials - degenerate;
  json summary{{"trials", c.trials},
               {"degenerate", degenerate},
               {"non_degenerate", non_degenerate},
               {"equivalent", equivalent},
               {"explicit_match", explicit_match},
               {"max_integrality_error", max_int},
               {"max_det_error", max_det},
               {"pass", equivalent == non_degenerate && explicit_match == non_degenerate}};
  os << json{{"config", c.to_json()}, {"summary", summary}}.dump(2) << '\n';
  return 0;
}

std::vector<Lattice> probe_lattices(const CatalogEntry& e, int K) {
  if (K < 2) fail(ErrorCode::kConfigError, "--K must be >= 2 for sum-of-lattices probes");
  return std::vector<Lattice>(static_cast<std::size_t>(K), e.lattice());
}

int cmd_sumlattice(const RunConfig& c, std::ostream& os) {
  const CatalogEntry e = single_lattice(c, "Z2");
  const std::uint64_t seed = require_seed(c);
  const int K = c.K;
  const auto lattices = probe_lattices(e, K);
  const auto h = sample_channel(K, 1.0, 1.0, seed).h;
  const auto probe = sum_lattice_probe(lattices, h, c.p);
  std::vector<std::string> cols;
  for (int i = 0; i < e.dim; ++i) cols.push_back("x" + std::to_string(i + 1));
  CsvWriter csv(os, c, cols);
  csv.comment("h: " + join_values(h) + " min_nonzero_norm: " + format_double(probe.min_nonzero_norm));
  for (const auto& q : probe.points) {
    std::vector<std::string> row;
    for (Eigen::Index i = 0; i < q.size(); ++i) row.push_back(format_double(q(i)));
    csv.row(row);
  }
  return 0;
}

int cmd_probe(const RunConfig& c, std::ostream& os) {
  const CatalogEntry e = single_lattice(c, "Z2");
  const std::uint64_t seed = require_seed(c);
  const auto lattices = probe_lattices(e, c.K);
  const int p_max = std::max(1, c.p);
  std::vector<std::vector<double>> norms(c.trials, std::vector<double>(p_max));
  std::vector<std::vector<double>> channels(c.trials);
  parallel_for(c.trials, [&](std::size_t s) {
    // Same channel draw as `sumlattice --seed <seed + s>`.
    channels[s] = sample_channel(c.K, 1.0, 1.0, seed + s).h;
    for (int p = 1; p <= p_max; ++p) {
      norms[s][p - 1] = sum_lattice_probe(lattices, channels[s], p).min_nonzero_norm;
    }
  });
  CsvWriter csv(os, c, {"seed", "K", "p", "h", "min_nonzero_norm"});
  for (std::size_t s = 0; s < c.trials; ++s) {
    for (int p = 1; p <= p_max; ++p) {
      csv.row({std::to_string(seed + s), std::to_string(c.K), std::to_string(p), join_values(channels[s]),
               format_double(norms[s][p - 1])});
    }
  }
  return 0;
}

int cmd_catalog(const RunConfig& c, std::ostream& os) {
  const std::string action = c.positional.empty() ? "list" : c.positional[0];
  if (action == "list") {
    json arr = json::array();
    for (const auto& e : list_catalog()) arr.push_back(entry_json(e, false));
    os << arr.dump(2) << '\n';
    return 0;
  }
  if (action == "show") {
    if (c.positional.size() < 2) fail(ErrorCode::kConfigError, "catalog show needs a name");
    os << entry_json(resolve_ref(c.positional[1], c.dim), true).dump(2) << '\n';
    return 0;
  }
  fail(ErrorCode::kConfigError, "catalog action must be list or show");
}

int cmd_validate(const RunConfig&, std::ostream& os) {
  json arr = json::array();
  bool all = true;
  for (const auto& v : validate_catalog()) {
    json j{{"name", v.name},
           {"has_generator", v.has_generator},
           {"lambda1_ok", v.lambda1_ok},
           {"volume_ok", v.volume_ok},
           {"passed", v.passed}};
    j["lambda1"] = v.lambda1_found ? json(*v.lambda1_found) : json();
    j["volume"] = v.volume_found ? json(*v.volume_found) : json();
    j["coefficients_ok"] = v.coefficients_ok ? json(*v.coefficients_ok) : json();
    all = all && v.passed;
    arr.push_back(j);
  }
  os << json{{"passed", all}, {"entries", arr}}.dump(2) << '\n';
  return all ? 0 : 1;
}

void write_error(std::ostream& err, ErrorCode code, const std::string& message) {
  err << json{{"error", std::string(to_string(code))}, {"message", message},
              {"exit_code", exit_code(code)}}.dump()
      << '\n';
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

Grid Grid::parse(std::string_view text) {
  Grid g;
  g.text = std::string(text);
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) fail(ErrorCode::kConfigError, "grid must be start:stop:step");
    const double start = parse_number(parts[0]);
    const double stop = parse_number(parts[1]);
    const double step = parse_number(parts[2]);
    if (!(step > 0.0)) fail(ErrorCode::kConfigError, "grid step must be > 0");
    const double span = (stop - start) / step;
    if (span > 1e6) fail(ErrorCode::kConfigError, "grid has too many points");
    for (long i = 0; i <= static_cast<long>(std::floor(span + 1e-9)); ++i) {
      // Round to 12 significant digits so 0.1-steps print cleanly.
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", start + static_cast<double>(i) * step);
      g.values.push_back(std::strtod(buf, nullptr));
    }
  } else {
    for (const auto& part : split(text, ',')) g.values.push_back(parse_number(part));
  }
  if (g.values.empty()) fail(ErrorCode::kConfigError, "grid is empty");
  for (std::size_t i = 1; i < g.values.size(); ++i) {
    if (!(g.values[i] > g.values[i - 1])) {
      fail(ErrorCode::kConfigError, "grid must be strictly increasing");
    }
  }
  return g;
}

json RunConfig::to_json() const {
  json j{{"command", command}, {"lattices", lattices}, {"K", K},
         {"trials", trials},   {"mode", mode},         {"modes", modes},
         {"box", box},         {"p", p},               {"c", c},
         {"code_index", code_index}, {"integer_channel", integer_channel}};
  if (!positional.empty()) j["positional"] = positional;
  if (dim) j["dim"] = *dim;
  if (sigma2) j["sigma2"] = sigma2->text;
  if (rho_db) j["rho_db"] = rho_db->text;
  if (q) j["q"] = q->text;
  if (seed) j["seed"] = *seed;
  if (!out.empty()) j["out"] = out;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) fail(ErrorCode::kConfigError, "config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "command") c.command = value.get<std::string>();
      else if (key == "positional") c.positional = value.get<std::vector<std::string>>();
      else if (key == "lattices") c.lattices = value.get<std::vector<std::string>>();
      else if (key == "lattice") c.lattices = {value.get<std::string>()};
      else if (key == "dim") c.dim = value.get<int>();
      else if (key == "K") c.K = value.get<int>();
      else if (key == "sigma2") c.sigma2 = Grid::parse(value.is_string() ? value.get<std::string>() : value.dump());
      else if (key == "rho_db") c.rho_db = Grid::parse(value.is_string() ? value.get<std::string>() : value.dump());
      else if (key == "q") c.q = Grid::parse(value.is_string() ? value.get<std::string>() : value.dump());
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "trials") c.trials = value.get<std::size_t>();
      else if (key == "mode") c.mode = value.get<std::string>();
      else if (key == "modes") c.modes = value.get<std::vector<std::string>>();
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "box") c.box = value.get<int>();
      else if (key == "p") c.p = value.get<int>();
      else if (key == "c") c.c = value.get<std::vector<std::int64_t>>();
      else if (key == "code_index") c.code_index = value.get<int>();
      else if (key == "integer_channel") c.integer_channel = value.get<bool>();
      else fail(ErrorCode::kConfigError, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, std::string("bad config value: ") + e.what());
  }
  return c;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    std::ofstream file;
    std::ostringstream buffer;
    const auto& cmd = config.command;
    int status = 0;
    if (cmd == "theta") status = cmd_theta(config, buffer);
    else if (cmd == "flatness") status = cmd_flatness(config, buffer);
    else if (cmd == "caf-decode") status = cmd_caf_decode(config, buffer);
    else if (cmd == "caf-surface") status = cmd_caf_surface(config, buffer);
    else if (cmd == "caf-rate") status = cmd_caf_rate(config, buffer);
    else if (cmd == "thm2") status = cmd_thm2(config, buffer);
    else if (cmd == "sumlattice") status = cmd_sumlattice(config, buffer);
    else if (cmd == "probe") status = cmd_probe(config, buffer);
    else if (cmd == "catalog") status = cmd_catalog(config, buffer);
    else if (cmd == "validate") status = cmd_validate(config, buffer);
    else fail(ErrorCode::kConfigError, "unknown command '" + cmd + "'");
    if (config.out.empty()) {
      out << buffer.str();
    } else {
      file.open(config.out, std::ios::binary);
      if (!file) fail(ErrorCode::kIoError, "cannot open output file '" + config.out + "'");
      file << buffer.str();
      if (!file) fail(ErrorCode::kIoError, "failed writing '" + config.out + "'");
    }
    return status;
  } catch (const Error& e) {
    write_error(err, e.code(), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    write_error(err, ErrorCode::kInvalidArgument, e.what());
    return exit_code(ErrorCode::kInvalidArgument);
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lattice theta series, flatness factors and compute-and-forward experiments",
               "lattheta"};
  app.fallthrough();
  app.require_subcommand(1);

  std::vector<std::string> lattices, modes, positional;
  std::string sigma2, rho_db, q, mode, out_path, config_path;
  std::vector<std::int64_t> scales;
  int dim = 0, K = 2, box = 8, p = 1, code_index = 3;
  std::uint64_t seed = 0;
  std::size_t trials = 100;
  bool integer_channel = false;

  std::map<std::string, CLI::Option*> opts;
  opts["lattice"] = app.add_option("--lattice", lattices, "catalog names or spec files")->delimiter(',');
  opts["dim"] = app.add_option("--dim", dim, "dimension for Zn/Dn/Dn_star");
  opts["K"] = app.add_option("--K", K, "number of transmitters");
  opts["sigma2"] = app.add_option("--sigma2", sigma2, "noise variance grid");
  opts["rho_db"] = app.add_option("--rho-db", rho_db, "SNR grid in dB");
  opts["q"] = app.add_option("--q", q, "nome grid");
  opts["seed"] = app.add_option("--seed", seed, "master RNG seed");
  opts["trials"] = app.add_option("--trials", trials, "number of trials");
  opts["mode"] = app.add_option("--mode", mode, "exact|approx or hnf|orthogonal");
  opts["modes"] = app.add_option("--modes", modes, "theta columns: exact,approx,baseline")->delimiter(',');
  opts["out"] = app.add_option("--out", out_path, "output file (default stdout)");
  opts["box"] = app.add_option("--box", box, "coefficient search bound");
  opts["p"] = app.add_option("--p", p, "coefficient range for sum-of-lattices probes");
  opts["c"] = app.add_option("--c", scales, "nesting scales for thm2")->delimiter(',');
  opts["code_index"] = app.add_option("--code-index", code_index, "coarse scale k in k·Λ_F");
  opts["integer_channel"] = app.add_flag("--integer-channel", integer_channel, "use h = a");
  app.add_option("--config", config_path, "JSON run configuration");

  for (const auto& name : kCommands) {
    auto* sub = app.add_subcommand(name);
    if (name == "catalog") sub->add_option("action", positional, "list | show <name>");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    write_error(err, ErrorCode::kConfigError, e.what());
    return exit_code(ErrorCode::kConfigError);
  }

  RunConfig config;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) fail(ErrorCode::kIoError, "cannot read config '" + config_path + "'");
      json j;
      try {
        in >> j;
      } catch (const json::exception& e) {
        fail(ErrorCode::kConfigError, std::string("config is not valid JSON: ") + e.what());
      }
      config = RunConfig::from_json(j);
    }
    config.command = app.get_subcommands().front()->get_name();
    auto given = [&](const char* key) { return opts[key]->count() > 0; };
    if (!positional.empty()) config.positional = positional;
    if (given("lattice")) config.lattices = lattices;
    if (given("dim")) config.dim = dim;
    if (given("K")) config.K = K;
    if (given("sigma2")) config.sigma2 = Grid::parse(sigma2);
    if (given("rho_db")) config.rho_db = Grid::parse(rho_db);
    if (given("q")) config.q = Grid::parse(q);
    if (given("seed")) config.seed = seed;
    if (given("trials")) config.trials = trials;
    if (given("mode")) config.mode = mode;
    if (given("modes")) config.modes = modes;
    if (given("out")) config.out = out_path;
    if (given("box")) config.box = box;
    if (given("p")) config.p = p;
    if (given("c")) config.c = scales;
    if (given("code_index")) config.code_index = code_index;
    if (given("integer_channel")) config.integer_channel = integer_channel;
  } catch (const Error& e) {
    write_error(err, e.code(), e.what());
    return exit_code(e.code());
  }
  return run(config, out, err);
}

}  // namespace lattheta
