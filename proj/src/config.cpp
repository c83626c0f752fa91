#include "semilin/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "semilin/errors.hpp"
#include "semilin/expression.hpp"
#include "semilin/localization.hpp"

namespace semilin {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Piece {
  std::string_view text;
  int offset = 0;  // position of text within the split string
};

// Splits on `sep` outside parentheses and trims each piece.
std::vector<Piece> split_top(std::string_view s, char sep) {
  std::vector<Piece> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    const char c = i < s.size() ? s[i] : sep;
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth <= 0) {
      std::string_view raw = s.substr(start, i - start);
      std::size_t lead = 0;
      while (lead < raw.size() && std::isspace(static_cast<unsigned char>(raw[lead]))) ++lead;
      out.push_back({trim(raw), static_cast<int>(start + lead)});
      start = i + 1;
    }
  }
  return out;
}

[[noreturn]] void fail_at(const ConfigEntry& e, int offset, const std::string& msg) {
  throw ParseError(e.line, e.value_column + offset, msg);
}

double number_at(const ConfigEntry& e, std::string_view text, int offset) {
  text = trim(text);
  double v = 0.0;
  const char* first = text.data();
  if (!text.empty() && text.front() == '+') ++first;
  const auto [end, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    fail_at(e, offset, "expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

double number(const ConfigEntry& e) { return number_at(e, e.value, 0); }

long integer(const ConfigEntry& e) {
  const double v = number(e);
  if (v != std::floor(v)) fail_at(e, 0, "expected an integer");
  return static_cast<long>(v);
}

std::vector<double> number_list(const ConfigEntry& e) {
  std::vector<double> out;
  for (const Piece& p : split_top(e.value, ',')) out.push_back(number_at(e, p.text, p.offset));
  return out;
}

// "-1, 0, 1" (scalars) or "(-1, 0), (1, 0)" (vectors).
std::vector<ControlVec> control_points(const ConfigEntry& e) {
  std::vector<ControlVec> out;
  for (const Piece& p : split_top(e.value, ',')) {
    std::vector<double> coords;
    if (!p.text.empty() && p.text.front() == '(') {
      if (p.text.back() != ')') fail_at(e, p.offset, "unbalanced parenthesis");
      const std::string_view inner = p.text.substr(1, p.text.size() - 2);
      for (const Piece& q : split_top(inner, ',')) coords.push_back(number_at(e, q.text, p.offset + 1 + q.offset));
    } else {
      coords.push_back(number_at(e, p.text, p.offset));
    }
    if (!out.empty() && static_cast<std::size_t>(out.front().size()) != coords.size()) {
      fail_at(e, p.offset, "control points must all have the same length");
    }
    out.push_back(Eigen::Map<const ControlVec>(coords.data(), static_cast<Eigen::Index>(coords.size())));
  }
  if (out.empty()) fail_at(e, 0, "empty control set");
  return out;
}

Expression expression_at(const ConfigEntry& e, std::string_view text, int offset, const VariableTable& vars) {
  return Expression::parse(text, vars, e.line, e.value_column + offset);
}

Expression expression(const ConfigEntry& e, const VariableTable& vars) {
  return expression_at(e, e.value, 0, vars);
}

// Slot layout x1..xN, then t, then the extras in order.
struct Slots {
  VariableTable table;
  int x0 = 0;
  int t = 0;
};

Slots space_time_slots(int dim) {
  Slots s;
  for (int i = 0; i < dim; ++i) s.table.add("x" + std::to_string(i + 1));
  if (dim == 1) s.table.alias("x", 0);
  s.t = s.table.add("t");
  return s;
}

constexpr std::size_t kMaxSlots = 32;

class SlotBuffer {
 public:
  explicit SlotBuffer(std::size_t n) : n_(n) {}
  double& operator[](std::size_t i) { return data_[i]; }
  std::span<const double> view() const { return {data_.data(), n_}; }

 private:
  std::array<double, kMaxSlots> data_{};
  std::size_t n_;
};

void put_x(SlotBuffer& b, const Vec& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) b[static_cast<std::size_t>(i)] = x[i];
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& known_keys() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> keys{
      {"problem", {"name", "dim", "horizon", "suite", "terminal", "builtin"}},
      {"diffusion", {"sigma", "mu", "bound"}},
      {"hamiltonian", {"type", "H", "growth_K"}},
      {"controls", {"D", "Gamma", "drift", "potential", "source", "A", "B", "h_upper", "f_bound"}},
      {"grid", {"radius", "nodes", "levels"}},
      {"run",
       {"kappa", "tol", "sup_tol", "max_iter", "quad_nodes", "tail_cut", "ladder", "seed", "mc_paths",
        "mc_dt", "bias_allowance", "points", "residual_warn"}},
  };
  return keys;
}

bool lipschitz_key(std::string_view key) {
  if (key.size() < 5 || key.substr(0, 2) != "K_") return false;
  const std::string_view rest = key.substr(2);
  const std::size_t us = rest.find('_');
  if (us == std::string_view::npos || us == 0 || us + 1 == rest.size()) return false;
  auto digits = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  };
  return digits(rest.substr(0, us)) && digits(rest.substr(us + 1));
}

const ConfigEntry& required(const ConfigFile& cfg, std::string_view section, std::string_view key) {
  const ConfigEntry* e = cfg.find(section, key);
  if (!e) {
    throw Error(ErrorKind::Parse, "missing key '" + std::string(key) + "' in [" + std::string(section) + "]");
  }
  return *e;
}

DiffusionSpec parse_diffusion(const ConfigFile& cfg, const Problem& p) {
  const ConfigEntry* e = cfg.find("diffusion", "sigma");
  if (!e) return DiffusionSpec::identity(p.dim);
  const Slots slots = space_time_slots(p.dim);
  const auto rows = split_top(e->value, ';');
  std::vector<Expression> entries;
  for (const Piece& row : rows) {
    const auto cols = split_top(row.text, ',');
    if (static_cast<int>(cols.size()) != p.dim || static_cast<int>(rows.size()) != p.dim) {
      fail_at(*e, row.offset, "sigma must be " + std::to_string(p.dim) + "x" + std::to_string(p.dim) +
                                  " (rows separated by ';')");
    }
    for (const Piece& c : cols) entries.push_back(expression_at(*e, c.text, row.offset + c.offset, slots.table));
  }
  const int n = p.dim;
  auto sigma = [entries, n, t_slot = slots.t, size = slots.table.size()](const Vec& x, double t) {
    SlotBuffer b(size);
    put_x(b, x);
    b[static_cast<std::size_t>(t_slot)] = t;
    Mat m(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) m(i, j) = entries[static_cast<std::size_t>(i * n + j)](b.view());
    }
    return m;
  };
  const bool constant = std::all_of(entries.begin(), entries.end(), [](const Expression& x) { return x.is_constant(); });
  DiffusionSpec spec;
  if (constant) {
    spec = DiffusionSpec::constant_matrix(sigma(zeros(n), 0.0));
  } else {
    spec.dim = n;
    spec.sigma = sigma;
    // Not declared: estimated on a lattice of the box.
    const int per = n == 1 ? 65 : 17;
    const SpatialGrid lattice{n, p.grid.radius, per};
    double mu = std::numeric_limits<double>::infinity();
    double bound = 0.0;
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      for (int l = 0; l < 5; ++l) {
        const Mat s = sigma(lattice.node(i), p.horizon * l / 4.0);
        const Mat a = s * s.transpose();
        mu = std::min(mu, Eigen::SelfAdjointEigenSolver<Mat>(a).eigenvalues().minCoeff());
        bound = std::max(bound, s.norm());
      }
    }
    spec.mu_ellipticity = mu;
    spec.sigma_bound = bound;
  }
  if (const ConfigEntry* m = cfg.find("diffusion", "mu")) spec.mu_ellipticity = number(*m);
  if (const ConfigEntry* b = cfg.find("diffusion", "bound")) spec.sigma_bound = number(*b);
  return spec;
}

HamiltonianSpec parse_generic(const ConfigFile& cfg, const Problem& p) {
  Slots slots = space_time_slots(p.dim);
  const int u_slot = slots.table.add("u");
  const int p0 = static_cast<int>(slots.table.size());
  for (int i = 0; i < p.dim; ++i) slots.table.add("p" + std::to_string(i + 1));
  if (p.dim == 1) slots.table.alias("p", p0);
  const Expression h = expression(required(cfg, "hamiltonian", "H"), slots.table);
  auto fn = [h, u_slot, p0, t_slot = slots.t, size = slots.table.size()](const Vec& q, double u, const Vec& x,
                                                                          double t) {
    SlotBuffer b(size);
    put_x(b, x);
    b[static_cast<std::size_t>(t_slot)] = t;
    b[static_cast<std::size_t>(u_slot)] = u;
    for (Eigen::Index i = 0; i < q.size(); ++i) b[static_cast<std::size_t>(p0 + i)] = q[i];
    return h(b.view());
  };
  return HamiltonianSpec::generic(fn);
}

HamiltonianSpec parse_isaacs(const ConfigFile& cfg, const Problem& p) {
  IsaacsSpec spec;
  spec.D_points = control_points(required(cfg, "controls", "D"));
  spec.Gamma_points = control_points(required(cfg, "controls", "Gamma"));
  const int kd = static_cast<int>(spec.D_points.front().size());
  const int ke = static_cast<int>(spec.Gamma_points.front().size());
  Slots slots = space_time_slots(p.dim);
  const int d0 = static_cast<int>(slots.table.size());
  for (int i = 0; i < kd; ++i) slots.table.add("d" + std::to_string(i + 1));
  const int e0 = static_cast<int>(slots.table.size());
  for (int i = 0; i < ke; ++i) slots.table.add("e" + std::to_string(i + 1));
  if (kd == 1) {
    slots.table.alias("d", d0);
    slots.table.alias("delta", d0);
  }
  if (ke == 1) {
    slots.table.alias("e", e0);
    slots.table.alias("eta", e0);
  }
  if (slots.table.size() > kMaxSlots) throw Error(ErrorKind::Parse, "too many control components");

  struct Binder {
    int t_slot, d0, e0;
    std::size_t size;
    SlotBuffer fill(const Vec& x, double t, const ControlVec& d, const ControlVec& e) const {
      SlotBuffer b(size);
      put_x(b, x);
      b[static_cast<std::size_t>(t_slot)] = t;
      for (Eigen::Index i = 0; i < d.size(); ++i) b[static_cast<std::size_t>(d0 + i)] = d[i];
      for (Eigen::Index i = 0; i < e.size(); ++i) b[static_cast<std::size_t>(e0 + i)] = e[i];
      return b;
    }
  };
  const Binder bind{slots.t, d0, e0, slots.table.size()};

  const ConfigEntry& drift_entry = required(cfg, "controls", "drift");
  std::vector<Expression> drift;
  for (const Piece& c : split_top(drift_entry.value, ',')) {
    drift.push_back(expression_at(drift_entry, c.text, c.offset, slots.table));
  }
  if (static_cast<int>(drift.size()) != p.dim) {
    fail_at(drift_entry, 0, "drift needs " + std::to_string(p.dim) + " component(s), got " +
                                std::to_string(drift.size()));
  }
  spec.drift = [drift, bind](const Vec& x, double t, const ControlVec& d, const ControlVec& e) {
    const SlotBuffer b = bind.fill(x, t, d, e);
    Vec out(static_cast<Eigen::Index>(drift.size()));
    for (std::size_t i = 0; i < drift.size(); ++i) out[static_cast<Eigen::Index>(i)] = drift[i](b.view());
    return out;
  };
  auto scalar = [&](std::string_view key) -> ControlScalarFn {
    const ConfigEntry* e = cfg.find("controls", key);
    const Expression ex = e ? expression(*e, slots.table) : Expression::constant(0.0);
    return [ex, bind](const Vec& x, double t, const ControlVec& d, const ControlVec& c) {
      return ex(bind.fill(x, t, d, c).view());
    };
  };
  spec.potential = scalar("potential");
  spec.source = scalar("source");
  if (const ConfigEntry* e = cfg.find("controls", "A")) spec.bounds.A = number(*e);
  if (const ConfigEntry* e = cfg.find("controls", "B")) spec.bounds.B = number(*e);
  if (const ConfigEntry* e = cfg.find("controls", "h_upper")) spec.bounds.h_upper = number(*e);
  if (const ConfigEntry* e = cfg.find("controls", "f_bound")) spec.bounds.f_bound = number(*e);
  return HamiltonianSpec::from_isaacs(std::move(spec));
}

void apply_grid(const ConfigFile& cfg, Problem& p) {
  if (const ConfigEntry* e = cfg.find("grid", "radius")) p.grid.radius = number(*e);
  if (const ConfigEntry* e = cfg.find("grid", "nodes")) p.grid.nodes_per_dim = static_cast<int>(integer(*e));
  if (const ConfigEntry* e = cfg.find("grid", "levels")) p.grid.levels = static_cast<int>(integer(*e));
}

}  // namespace

ConfigFile ConfigFile::parse(std::string_view text) {
  ConfigFile cfg;
  cfg.text_ = std::string(text);
  std::string current;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, nl - pos);
    ++line_no;
    pos = nl + 1;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string_view body = trim(line);
    if (body.empty()) {
      if (nl == text.size()) break;
      continue;
    }
    const int col = static_cast<int>(body.data() - line.data()) + 1;
    if (body.front() == '[') {
      if (body.back() != ']') throw ParseError(line_no, col, "unterminated section header");
      current = std::string(trim(body.substr(1, body.size() - 2)));
      const auto& keys = known_keys();
      if (std::none_of(keys.begin(), keys.end(), [&](const auto& k) { return k.first == current; })) {
        throw ParseError(line_no, col + 1, "unknown section '" + current + "'");
      }
      if (std::find(cfg.sections_.begin(), cfg.sections_.end(), current) != cfg.sections_.end()) {
        throw ParseError(line_no, col + 1, "duplicate section '" + current + "'");
      }
      cfg.sections_.push_back(current);
    } else {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, col, "expected 'key = value'");
      if (current.empty()) throw ParseError(line_no, col, "key outside of any section");
      ConfigEntry e;
      e.section = current;
      e.key = std::string(trim(line.substr(0, eq)));
      std::string_view raw = line.substr(eq + 1);
      std::size_t lead = 0;
      while (lead < raw.size() && std::isspace(static_cast<unsigned char>(raw[lead]))) ++lead;
      e.value = std::string(trim(raw));
      e.line = line_no;
      e.value_column = static_cast<int>(eq + 1 + lead) + 1;
      if (e.value.empty()) throw ParseError(line_no, e.value_column, "missing value for '" + e.key + "'");
      const auto& keys = known_keys();
      const auto it = std::find_if(keys.begin(), keys.end(), [&](const auto& k) { return k.first == current; });
      const bool known = std::find(it->second.begin(), it->second.end(), e.key) != it->second.end() ||
                         (current == "hamiltonian" && lipschitz_key(e.key));
      if (!known) throw ParseError(line_no, col, "unknown key '" + e.key + "' in [" + current + "]");
      if (cfg.find(current, e.key)) throw ParseError(line_no, col, "duplicate key '" + e.key + "'");
      cfg.entries_.push_back(std::move(e));
    }
    if (nl == text.size()) break;
  }
  return cfg;
}

ConfigFile ConfigFile::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const ConfigEntry* ConfigFile::find(std::string_view section, std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.section == section && e.key == key) return &e;
  }
  return nullptr;
}

std::vector<const ConfigEntry*> ConfigFile::section(std::string_view name) const {
  std::vector<const ConfigEntry*> out;
  for (const auto& e : entries_) {
    if (e.section == name) out.push_back(&e);
  }
  return out;
}

bool ConfigFile::has_section(std::string_view name) const {
  return std::find(sections_.begin(), sections_.end(), name) != sections_.end();
}

Problem parse_problem(const ConfigFile& cfg) {
  if (const ConfigEntry* b = cfg.find("problem", "builtin")) {
    for (std::string_view banned : {"diffusion", "hamiltonian", "controls"}) {
      if (cfg.has_section(banned)) {
        throw ParseError(b->line, b->value_column,
                         "a builtin problem cannot be combined with a [" + std::string(banned) + "] section");
      }
    }
    Problem p = builtin(b->value);
    if (const ConfigEntry* e = cfg.find("problem", "name")) p.name = e->value;
    apply_grid(cfg, p);
    p.validate();
    return p;
  }

  Problem p;
  p.name = cfg.find("problem", "name") ? cfg.find("problem", "name")->value : "problem";
  if (const ConfigEntry* e = cfg.find("problem", "dim")) {
    const long d = integer(*e);
    if (d < 1 || d > kMaxDim) fail_at(*e, 0, "dim must be between 1 and " + std::to_string(kMaxDim));
    p.dim = static_cast<int>(d);
  }
  p.horizon = number(required(cfg, "problem", "horizon"));
  if (const ConfigEntry* e = cfg.find("problem", "suite")) {
    try {
      p.suite = parse_suite(e->value);
    } catch (const Error& err) {
      fail_at(*e, 0, err.what());
    }
  }
  apply_grid(cfg, p);
  // Checked before any coefficient is sampled over [0, T].
  if (!(p.horizon > 0.0)) throw Error(ErrorKind::Validation, "horizon must be positive");

  const Slots xs = space_time_slots(p.dim);
  const Expression beta = expression(required(cfg, "problem", "terminal"), xs.table);
  if (beta.depends_on(xs.t)) {
    const ConfigEntry& e = required(cfg, "problem", "terminal");
    fail_at(e, 0, "terminal data cannot depend on t");
  }
  p.terminal = [beta, size = xs.table.size()](const Vec& x) {
    SlotBuffer b(size);
    put_x(b, x);
    return beta(b.view());
  };
  p.diffusion = parse_diffusion(cfg, p);

  std::string type = cfg.has_section("controls") ? "isaacs" : "generic";
  if (const ConfigEntry* e = cfg.find("hamiltonian", "type")) {
    type = e->value;
    if (type != "generic" && type != "isaacs") fail_at(*e, 0, "type must be generic or isaacs");
  }
  if (type == "isaacs") {
    if (cfg.find("hamiltonian", "H")) {
      const ConfigEntry& e = *cfg.find("hamiltonian", "H");
      fail_at(e, 0, "an Isaacs Hamiltonian is given through [controls], not H");
    }
    p.hamiltonian = parse_isaacs(cfg, p);
  } else {
    if (cfg.has_section("controls")) throw Error(ErrorKind::Parse, "[controls] requires type = isaacs");
    p.hamiltonian = parse_generic(cfg, p);
  }
  if (const ConfigEntry* e = cfg.find("hamiltonian", "growth_K")) p.hamiltonian.growth_K = number(*e);
  for (const ConfigEntry* e : cfg.section("hamiltonian")) {
    if (!lipschitz_key(e->key)) continue;
    const std::size_t us = e->key.find('_', 2);
    const int m = std::stoi(e->key.substr(2, us - 2));
    const int n = std::stoi(e->key.substr(us + 1));
    p.hamiltonian.lipschitz_table[{m, n}] = number(*e);
  }
  p.validate();
  return p;
}

Problem load_problem(const std::filesystem::path& path) { return parse_problem(ConfigFile::read(path)); }

RunConfig parse_run_config(const ConfigFile& cfg, const Problem& problem, RunConfig base) {
  RunConfig rc = std::move(base);
  if (const ConfigEntry* e = cfg.find("run", "kappa")) {
    if (e->value == "adaptive") {
      rc.kappa_adaptive = true;
    } else {
      rc.kappa = number(*e);
      rc.kappa_adaptive = false;
    }
  }
  if (const ConfigEntry* e = cfg.find("run", "tol")) rc.tol = number(*e);
  if (const ConfigEntry* e = cfg.find("run", "sup_tol")) {
    rc.sup_tol = e->value == "inf" ? std::numeric_limits<double>::infinity() : number(*e);
  }
  if (const ConfigEntry* e = cfg.find("run", "max_iter")) rc.max_iter = static_cast<int>(integer(*e));
  if (const ConfigEntry* e = cfg.find("run", "quad_nodes")) rc.quad_nodes_per_dim = static_cast<int>(integer(*e));
  if (const ConfigEntry* e = cfg.find("run", "tail_cut")) rc.tail_cut_sigmas = number(*e);
  if (const ConfigEntry* e = cfg.find("run", "ladder")) rc.ladder = number_list(*e);
  if (const ConfigEntry* e = cfg.find("run", "seed")) rc.mc.seed = static_cast<std::uint64_t>(integer(*e));
  if (const ConfigEntry* e = cfg.find("run", "mc_paths")) rc.mc.n_paths = static_cast<int>(integer(*e));
  if (const ConfigEntry* e = cfg.find("run", "mc_dt")) rc.mc.dt = number(*e);
  if (const ConfigEntry* e = cfg.find("run", "bias_allowance")) rc.mc.bias_allowance = number(*e);
  if (const ConfigEntry* e = cfg.find("run", "residual_warn")) rc.residual_warn = number(*e);
  if (const ConfigEntry* e = cfg.find("run", "points")) {
    // (t, x1, ..., xN), (t, ...)
    rc.crosscheck_points.clear();
    for (const Piece& p : split_top(e->value, ',')) {
      if (p.text.size() < 2 || p.text.front() != '(' || p.text.back() != ')') {
        fail_at(*e, p.offset, "points are written (t, x1, ..., xN)");
      }
      std::vector<double> c;
      for (const Piece& q : split_top(p.text.substr(1, p.text.size() - 2), ',')) {
        c.push_back(number_at(*e, q.text, p.offset + 1 + q.offset));
      }
      if (static_cast<int>(c.size()) != problem.dim + 1) {
        fail_at(*e, p.offset, "point needs t and " + std::to_string(problem.dim) + " coordinate(s)");
      }
      PathStart s;
      s.t = c[0];
      s.x = Vec(problem.dim);
      for (int i = 0; i < problem.dim; ++i) s.x[i] = c[static_cast<std::size_t>(i + 1)];
      rc.crosscheck_points.push_back(s);
    }
  }
  rc.validate();
  return rc;
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"linear_heat", "burgers", "robust_game"};
  return names;
}

Problem builtin(std::string_view name) {
  Problem p;
  p.name = std::string(name);
  p.dim = 1;
  p.diffusion = DiffusionSpec::identity(1);
  if (name == "linear_heat") {
    p.horizon = 1.0;
    p.hamiltonian = HamiltonianSpec::generic([](const Vec&, double, const Vec&, double) { return 1.0; }, 1.0);
    p.terminal = [](const Vec&) { return 0.5; };
    p.suite = Suite::A;
  } else if (name == "burgers") {
    p.horizon = 0.5;
    p.hamiltonian =
        HamiltonianSpec::generic([](const Vec& q, double u, const Vec&, double) { return u * q[0]; }, 1.0);
    // On |u| <= m the flux u p is m-Lipschitz in p and independent of x.
    for (int m : {1, 2, 4, 8, 16}) {
      for (int n : {2, 4, 8, 16}) p.hamiltonian.lipschitz_table[{m, n}] = m;
    }
    p.terminal = [](const Vec& x) { return 0.5 * cutoff(x[0], 2.0) * std::tanh(-x[0]); };
    p.suite = Suite::B;
  } else if (name == "robust_game") {
    p.horizon = 1.0;
    IsaacsSpec s;
    for (double v : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      ControlVec c(1);
      c[0] = v;
      s.D_points.push_back(c);
      s.Gamma_points.push_back(c);
    }
    s.drift = [](const Vec&, double, const ControlVec& d, const ControlVec& e) {
      Vec r(1);
      r[0] = d[0] + 0.5 * e[0];
      return r;
    };
    s.potential = [](const Vec&, double, const ControlVec&, const ControlVec&) { return -0.1; };
    s.source = [](const Vec& x, double, const ControlVec& d, const ControlVec& e) {
      return -d[0] * d[0] + e[0] * e[0] - x[0] * x[0] * cutoff(x[0], 4.0);
    };
    s.bounds.h_upper = -0.1;
    // max of x^2 xi_4(x) is 512/27 at |x| = 16/3
    s.bounds.f_bound = 2.0 + 512.0 / 27.0;
    p.hamiltonian = HamiltonianSpec::from_isaacs(std::move(s), 1.0);
    p.terminal = [](const Vec& x) { return cutoff(x[0], 4.0); };
    p.suite = Suite::C;
  } else {
    throw Error(ErrorKind::Precondition, "unknown builtin problem '" + std::string(name) + "'");
  }
  p.validate();
  return p;
}

}  // namespace semilin
