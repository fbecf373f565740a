#include "voterbias/synthetic.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "voterbias/cache.hpp"
#include "voterbias/error.hpp"

namespace voterbias::synth {

namespace pt = boost::property_tree;

double NormalStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = static_cast<double>((rng_() >> 11) + 1) * kScale;
  const double u2 = static_cast<double>((rng_() >> 11) + 1) * kScale;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

namespace {

void require_sigma(double s, const char* name) {
  if (!std::isfinite(s) || s < 0) throw UsageError(std::string(name) + " must be finite and >= 0");
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw UsageError(std::string(name) + " must be finite");
}

std::string numbered(const char* prefix, std::size_t i) { return prefix + std::to_string(i + 1); }

}  // namespace

void ScenarioSpec::validate() const {
  if (beta.empty()) throw UsageError("scenario needs at least one beta");
  if (alpha.size() != beta.size()) {
    throw UsageError("scenario needs one alpha per beta (one instrument per exposure)");
  }
  for (double b : beta) require_finite(b, "beta");
  for (double a : alpha) require_finite(a, "alpha");
  require_finite(gamma, "gamma");
  require_finite(delta, "delta");
  require_sigma(sigma_z, "sigma_z");
  require_sigma(sigma_u, "sigma_u");
  require_sigma(sigma_nu, "sigma_nu");
  require_sigma(sigma_eps, "sigma_eps");
  const auto p = static_cast<long>(beta.size());
  if (n < 2 * p + 2) throw UsageError("scenario n must be at least p + q + 2");
}

ScenarioSpec reference_scenario(long n, std::uint64_t seed) {
  ScenarioSpec s;
  s.name = "reference";
  s.n = n;
  s.seed = seed;
  return s;
}

est::DesignMatrix generate(const ScenarioSpec& spec) {
  spec.validate();
  const auto p = static_cast<Eigen::Index>(spec.exposures());
  const Eigen::Index n = spec.n;

  est::DesignMatrix d;
  d.stratum = spec.name;
  d.outcome_name = "Y";
  for (Eigen::Index j = 0; j < p; ++j) {
    d.exposure_names.push_back(numbered("X", j));
    d.instrument_names.push_back(numbered("Z", j));
  }
  d.y.resize(n);
  d.exposures.resize(n, p);
  d.instruments.resize(n, p);
  d.controls.resize(n, 0);

  NormalStream normal(spec.seed);
  std::vector<double> nu(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) d.instruments(i, j) = spec.sigma_z * normal.next();
    const double u = spec.sigma_u * normal.next();
    for (auto& v : nu) v = spec.sigma_nu * normal.next();
    const double eps = spec.sigma_eps * normal.next();
    double y = spec.gamma * u + eps;
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto js = static_cast<std::size_t>(j);
      const double x = spec.alpha[js] * d.instruments(i, j) + spec.delta * u + nu[js];
      d.exposures(i, j) = x;
      y += spec.beta[js] * x;
    }
    d.y(i) = y;
  }
  return d;
}

PlimResult scenario_plim(const ScenarioSpec& spec) {
  spec.validate();
  const auto p = static_cast<Eigen::Index>(spec.exposures());
  const double su2 = spec.sigma_u * spec.sigma_u;
  Eigen::MatrixXd var_x = Eigen::MatrixXd::Constant(p, p, spec.delta * spec.delta * su2);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double a = spec.alpha[static_cast<std::size_t>(j)];
    var_x(j, j) += a * a * spec.sigma_z * spec.sigma_z + spec.sigma_nu * spec.sigma_nu;
  }
  const Eigen::VectorXd cov_xu = Eigen::VectorXd::Constant(p, spec.gamma * spec.delta * su2);

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(var_x);
  if (var_x.isZero(0.0) || !lu.isInvertible()) {
    throw SingularDesignError("scenario exposures have zero variance", {});
  }
  const Eigen::VectorXd bias = lu.solve(cov_xu);

  PlimResult out;
  out.tsls = spec.beta;
  out.ols = spec.beta;
  for (Eigen::Index j = 0; j < p; ++j) out.ols[static_cast<std::size_t>(j)] += bias(j);
  return out;
}

void JointScenarioSpec::validate() const {
  for (double v : {beta1, beta2, gamma, alpha1, alpha2, delta}) require_finite(v, "coefficient");
  require_sigma(sigma_z, "sigma_z");
  require_sigma(sigma_u, "sigma_u");
  require_sigma(sigma_nu, "sigma_nu");
  require_sigma(sigma_eps, "sigma_eps");
  require_sigma(sigma_rank, "sigma_rank");
  if (group_size < 1) throw UsageError("group_size must be >= 1");
  if (n < 6) throw UsageError("scenario n must be at least p + q + 2");
}

est::DesignMatrix generate_joint_scenario(const JointScenarioSpec& spec) {
  spec.validate();
  const Eigen::Index n = spec.n;
  est::DesignMatrix d;
  d.stratum = spec.name;
  d.outcome_name = "Y";
  d.exposure_names = {"X1", "X2"};
  d.instrument_names = {"Z1", "Z2"};
  d.y.resize(n);
  d.exposures.resize(n, 2);
  d.instruments.resize(n, 2);
  d.controls.resize(n, 0);

  NormalStream normal(spec.seed);
  Eigen::VectorXd u(n), eps(n), signal(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z1 = spec.sigma_z * normal.next();
    const double z2 = spec.sigma_z * normal.next();
    u(i) = spec.sigma_u * normal.next();
    const double nu = spec.sigma_nu * normal.next();
    const double eta = normal.next();
    eps(i) = spec.sigma_eps * normal.next();
    const double x1 = spec.alpha1 * z1 + spec.delta * u(i) + nu;
    d.instruments(i, 0) = z1;
    d.instruments(i, 1) = z2;
    d.exposures(i, 0) = x1;
    signal(i) = x1 + spec.alpha2 * z2 + spec.sigma_rank * eta;
  }

  // Rank 1 is the largest signal in the group; ties go to the earlier row.
  const auto rank_within = [&](const Eigen::VectorXd& key, Eigen::Index begin, Eigen::Index end,
                               std::vector<long>& ranks) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(end - begin));
    std::iota(idx.begin(), idx.end(), begin);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return key(a) > key(b); });
    ranks.assign(idx.size(), 0);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      ranks[static_cast<std::size_t>(idx[r] - begin)] = static_cast<long>(r + 1);
    }
  };

  const Eigen::VectorXd x1 = d.exposures.col(0);
  bool deterministic = spec.group_size > 1;
  std::vector<long> ranks, base_ranks;
  for (Eigen::Index begin = 0; begin < n; begin += spec.group_size) {
    const Eigen::Index end = std::min<Eigen::Index>(n, begin + spec.group_size);
    rank_within(signal, begin, end, ranks);
    rank_within(x1, begin, end, base_ranks);
    if (ranks != base_ranks) deterministic = false;
    for (Eigen::Index i = begin; i < end; ++i) {
      d.exposures(i, 1) = static_cast<double>(ranks[static_cast<std::size_t>(i - begin)]);
    }
  }
  if (deterministic) {
    throw SingularDesignError("X2 is a deterministic function of X1 within every group",
                              {"X1", "X2"});
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    d.y(i) = spec.beta1 * d.exposures(i, 0) + spec.beta2 * d.exposures(i, 1) + spec.gamma * u(i) +
             eps(i);
  }
  return d;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v[i]);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0;
  const auto b = text.find_first_not_of(" \t");
  const auto e = text.find_last_not_of(" \t");
  if (b == std::string::npos) throw UsageError("scenario: empty value for '" + key + "'");
  const char* first = text.data() + b;
  const char* last = text.data() + e + 1;
  const auto r = std::from_chars(first, last, v);
  if (r.ec != std::errc{} || r.ptr != last) {
    throw UsageError("scenario: '" + key + "' is not a number: " + text);
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

long parse_long(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 9e15) {
    throw UsageError("scenario: '" + key + "' must be an integer");
  }
  return static_cast<long>(v);
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw UsageError("scenario: seed must be an unsigned 64-bit integer: " + text);
  }
  return v;
}

}  // namespace

std::string serialize_scenario(const Scenario& scenario) {
  std::ostringstream out;
  out << "# voterbias synthetic scenario\nversion = 1\n\n[scenario]\n";
  if (const auto* s = std::get_if<ScenarioSpec>(&scenario)) {
    out << "kind = single\nname = " << s->name << "\nn = " << s->n << "\nbeta = " << fmt_list(s->beta)
        << "\ngamma = " << fmt(s->gamma) << "\nalpha = " << fmt_list(s->alpha)
        << "\ndelta = " << fmt(s->delta) << "\nsigma_z = " << fmt(s->sigma_z)
        << "\nsigma_u = " << fmt(s->sigma_u) << "\nsigma_nu = " << fmt(s->sigma_nu)
        << "\nsigma_eps = " << fmt(s->sigma_eps) << "\nseed = " << s->seed << '\n';
  } else {
    const auto& j = std::get<JointScenarioSpec>(scenario);
    out << "kind = joint\nname = " << j.name << "\nn = " << j.n << "\nbeta = " << fmt(j.beta1) << ", "
        << fmt(j.beta2) << "\ngamma = " << fmt(j.gamma) << "\nalpha = " << fmt(j.alpha1) << ", "
        << fmt(j.alpha2) << "\ndelta = " << fmt(j.delta) << "\nsigma_z = " << fmt(j.sigma_z)
        << "\nsigma_u = " << fmt(j.sigma_u) << "\nsigma_nu = " << fmt(j.sigma_nu)
        << "\nsigma_eps = " << fmt(j.sigma_eps) << "\nsigma_rank = " << fmt(j.sigma_rank)
        << "\ngroup_size = " << j.group_size << "\nseed = " << j.seed << '\n';
  }
  return out.str();
}

Scenario parse_scenario(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError(std::string("scenario file: ") + e.what());
  }
  const auto version = tree.get_optional<std::string>("version");
  if (!version) throw UsageError("scenario file: missing 'version'");
  if (*version != "1") throw UsageError("scenario file: unsupported version " + *version);
  const auto section = tree.get_child_optional("scenario");
  if (!section || section->empty()) throw UsageError("scenario file: missing [scenario] section");
  for (const auto& [key, node] : tree) {
    if (key != "version" && key != "scenario") {
      throw UsageError("scenario file: unexpected entry '" + key + "'");
    }
  }

  std::map<std::string, std::string> kv;
  for (const auto& [key, node] : *section) kv[key] = node.get_value<std::string>();
  const auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  const auto kind = take("kind").value_or("single");

  Scenario result;
  if (kind == "single") {
    ScenarioSpec s;
    if (auto v = take("name")) s.name = *v;
    if (auto v = take("n")) s.n = parse_long("n", *v);
    if (auto v = take("beta")) s.beta = parse_list("beta", *v);
    if (auto v = take("gamma")) s.gamma = parse_double("gamma", *v);
    if (auto v = take("alpha")) s.alpha = parse_list("alpha", *v);
    if (auto v = take("delta")) s.delta = parse_double("delta", *v);
    if (auto v = take("sigma_z")) s.sigma_z = parse_double("sigma_z", *v);
    if (auto v = take("sigma_u")) s.sigma_u = parse_double("sigma_u", *v);
    if (auto v = take("sigma_nu")) s.sigma_nu = parse_double("sigma_nu", *v);
    if (auto v = take("sigma_eps")) s.sigma_eps = parse_double("sigma_eps", *v);
    if (auto v = take("seed")) s.seed = parse_seed(*v);
    s.validate();
    result = s;
  } else if (kind == "joint") {
    JointScenarioSpec j;
    if (auto v = take("name")) j.name = *v;
    if (auto v = take("n")) j.n = parse_long("n", *v);
    if (auto v = take("beta")) {
      const auto b = parse_list("beta", *v);
      if (b.size() != 2) throw UsageError("joint scenario needs exactly two betas");
      j.beta1 = b[0];
      j.beta2 = b[1];
    }
    if (auto v = take("alpha")) {
      const auto a = parse_list("alpha", *v);
      if (a.size() != 2) throw UsageError("joint scenario needs exactly two alphas");
      j.alpha1 = a[0];
      j.alpha2 = a[1];
    }
    if (auto v = take("gamma")) j.gamma = parse_double("gamma", *v);
    if (auto v = take("delta")) j.delta = parse_double("delta", *v);
    if (auto v = take("sigma_z")) j.sigma_z = parse_double("sigma_z", *v);
    if (auto v = take("sigma_u")) j.sigma_u = parse_double("sigma_u", *v);
    if (auto v = take("sigma_nu")) j.sigma_nu = parse_double("sigma_nu", *v);
    if (auto v = take("sigma_eps")) j.sigma_eps = parse_double("sigma_eps", *v);
    if (auto v = take("sigma_rank")) j.sigma_rank = parse_double("sigma_rank", *v);
    if (auto v = take("group_size")) j.group_size = parse_long("group_size", *v);
    if (auto v = take("seed")) j.seed = parse_seed(*v);
    j.validate();
    result = j;
  } else {
    throw UsageError("scenario file: unknown kind '" + kind + "'");
  }
  if (!kv.empty()) throw UsageError("scenario file: unknown key '" + kv.begin()->first + "'");
  return result;
}

Scenario load_scenario(const std::string& path) {
  std::string text;
  try {
    text = cache::read_file(path);
  } catch (const DataError&) {
    throw UsageError("cannot read scenario file '" + path + "'");
  }
  return parse_scenario(text);
}

records::RecordTable to_records(const est::DesignMatrix& d) {
  records::RecordTable t;
  const auto n = d.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    t.add_row_keys(i + 1, i + 1, std::numeric_limits<double>::quiet_NaN(), d.stratum, "");
  }
  const auto add = [&](const std::string& name, const auto& col) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = col(i);
    t.add_column(name, std::move(v));
  };
  add(d.outcome_name, d.y);
  for (Eigen::Index j = 0; j < d.exposures.cols(); ++j) {
    add(d.exposure_names[static_cast<std::size_t>(j)], d.exposures.col(j));
  }
  for (Eigen::Index j = 0; j < d.instruments.cols(); ++j) {
    add(d.instrument_names[static_cast<std::size_t>(j)], d.instruments.col(j));
  }
  for (Eigen::Index j = 0; j < d.controls.cols(); ++j) {
    add(d.control_names[static_cast<std::size_t>(j)], d.controls.col(j));
  }
  return t;
}

}  // namespace voterbias::synth
