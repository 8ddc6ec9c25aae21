#include "maxent/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace maxent::cli {

using json = nlohmann::ordered_json;

ConfigError::ConfigError(std::size_t line, std::string field, const std::string& what)
    : Error([&] {
        std::ostringstream msg;
        msg << "config";
        if (line > 0) msg << ":" << line;
        if (!field.empty()) msg << ": field " << field;
        msg << ": " << what;
        return msg.str();
      }()),
      line_(line),
      field_(std::move(field)) {}

namespace {

// Forward iterator over the text that records the furthest offset the
// parser has looked at, so parse events can be mapped back to lines.
struct TrackingIterator {
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* p = nullptr;
  const char* base = nullptr;
  std::size_t* furthest = nullptr;

  reference operator*() const {
    *furthest = std::max(*furthest, static_cast<std::size_t>(p - base));
    return *p;
  }
  TrackingIterator& operator++() {
    ++p;
    return *this;
  }
  TrackingIterator operator++(int) {
    TrackingIterator old = *this;
    ++p;
    return old;
  }
  bool operator==(const TrackingIterator& o) const { return p == o.p; }
};

using LineMap = std::map<std::string, std::size_t>;

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

struct Parsed {
  json doc;
  LineMap lines;
};

Parsed parse_tracked(std::string_view text) {
  std::vector<std::size_t> newlines;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\n') newlines.push_back(i);
  }
  // characters before `offset` only: the lexer peeks one past a number
  auto line_of = [&](std::size_t offset) {
    return static_cast<std::size_t>(std::lower_bound(newlines.begin(), newlines.end(), offset) -
                                    newlines.begin()) +
           1;
  };

  struct Frame {
    bool array = false;
    std::string key;
    std::size_t index = 0;
  };
  std::vector<Frame> stack;
  std::size_t furthest = 0;
  Parsed out;

  auto pointer = [&] {
    std::string p;
    for (const auto& f : stack) p += "/" + (f.array ? std::to_string(f.index) : escape_token(f.key));
    return p;
  };
  auto record = [&] { out.lines.emplace(pointer(), line_of(furthest)); };

  json::parser_callback_t callback = [&](int, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
      case json::parse_event_t::array_start:
        if (stack.empty() || stack.back().array) record();
        stack.push_back({event == json::parse_event_t::array_start, "", 0});
        break;
      case json::parse_event_t::key:
        stack.back().key = parsed.get<std::string>();
        record();
        break;
      case json::parse_event_t::value:
        if (!stack.empty() && stack.back().array) {
          record();
          ++stack.back().index;
        }
        break;
      case json::parse_event_t::object_end:
      case json::parse_event_t::array_end:
        stack.pop_back();
        if (!stack.empty() && stack.back().array) ++stack.back().index;
        break;
    }
    return true;
  };

  const TrackingIterator first{text.data(), text.data(), &furthest};
  const TrackingIterator last{text.data() + text.size(), text.data(), &furthest};
  try {
    out.doc = json::parse(first, last, callback);
  } catch (const json::parse_error& e) {
    const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
    std::string what = e.what();
    const auto colon = what.find("parse error");
    if (colon != std::string::npos) what = what.substr(colon);
    throw ConfigError(line_of(std::min(at, text.size())), "", what);
  }
  return out;
}

// A node of the document together with its JSON pointer.
class Node {
 public:
  Node(const json& j, std::string ptr, const LineMap& lines)
      : j_(j), ptr_(std::move(ptr)), lines_(lines) {}

  const std::string& pointer() const { return ptr_; }
  const json& raw() const { return j_; }

  [[noreturn]] void fail(const std::string& what) const {
    const auto it = lines_.find(ptr_);
    throw ConfigError(it == lines_.end() ? 0 : it->second, ptr_.empty() ? "/" : ptr_, what);
  }

  void require_object(std::initializer_list<const char*> allowed) const {
    if (!j_.is_object()) fail("expected an object");
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j_.items()) {
      if (!known.contains(key)) child_unchecked(key).fail("unknown field");
    }
  }

  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Node child(const std::string& key) const {
    if (!has(key)) fail("missing required field \"" + key + "\"");
    return child_unchecked(key);
  }

  std::optional<Node> find(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return child_unchecked(key);
  }

  std::vector<Node> elements() const {
    if (!j_.is_array()) fail("expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_.size(); ++i) {
      out.emplace_back(j_[i], ptr_ + "/" + std::to_string(i), lines_);
    }
    return out;
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }

  std::uint64_t unsigned_integer() const {
    if (!j_.is_number_unsigned()) fail("expected a non-negative integer");
    return j_.get<std::uint64_t>();
  }

  std::size_t positive_count() const {
    const auto v = unsigned_integer();
    if (v == 0) fail("must be positive");
    return static_cast<std::size_t>(v);
  }

  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& e : elements()) out.push_back(e.number());
    return out;
  }

 private:
  Node child_unchecked(const std::string& key) const {
    return Node(j_.at(key), ptr_ + "/" + escape_token(key), lines_);
  }

  const json& j_;
  std::string ptr_;
  const LineMap& lines_;
};

// Runs `build`, reporting library argument errors at `at`.
template <class F>
auto anchored(const Node& at, F&& build) {
  try {
    return build();
  } catch (const InvalidArgument& e) {
    at.fail(e.what());
  }
}

Statistic statistic_at(const Node& n) {
  const auto name = n.string();
  try {
    return statistic_from_name(name);
  } catch (const InvalidArgument& e) {
    n.fail(e.what());
  }
}

BoxPrior parse_box(const Node& n) {
  n.require_object({"dimension", "lo", "hi", "lower", "upper"});
  if (n.has("lower") || n.has("upper")) {
    if (n.has("dimension") || n.has("lo") || n.has("hi")) {
      n.fail("give either dimension/lo/hi or lower/upper");
    }
    const auto lower = n.child("lower").numbers();
    const auto upper = n.child("upper").numbers();
    return anchored(n, [&] { return BoxPrior(lower, upper); });
  }
  const auto dim = n.child("dimension").positive_count();
  const double lo = n.child("lo").number();
  const auto hi_node = n.child("hi");
  const double hi = hi_node.number();
  return anchored(hi_node, [&] { return BoxPrior::cube(dim, lo, hi); });
}

HyperPrior parse_hyperprior(const Node& n) {
  std::vector<HyperComponent> comps;
  for (const auto& e : n.elements()) {
    e.require_object({"kind", "lo", "hi"});
    const auto kind_node = e.child("kind");
    const auto kind = kind_node.string();
    const double lo = e.child("lo").number();
    const double hi = e.child("hi").number();
    if (kind == "uniform") {
      comps.push_back(anchored(e, [&] { return HyperComponent::uniform(lo, hi); }));
    } else if (kind == "log-uniform") {
      comps.push_back(anchored(e, [&] { return HyperComponent::log_uniform(lo, hi); }));
    } else {
      kind_node.fail("unknown hyperprior kind \"" + kind + "\" (uniform, log-uniform)");
    }
  }
  return anchored(n, [&] { return HyperPrior(comps); });
}

template <class Enum>
Enum parse_enum(const Node& n, std::initializer_list<Enum> values,
                const std::function<std::string(Enum)>& name) {
  const auto s = n.string();
  std::string choices;
  for (Enum v : values) {
    if (name(v) == s) return v;
    choices += (choices.empty() ? "" : ", ") + name(v);
  }
  n.fail("unknown value \"" + s + "\" (" + choices + ")");
}

HierarchicalModel parse_model(const Node& root, const BoxPrior& box) {
  const auto cond = root.child("conditional");
  cond.require_object({"family", "link", "features"});
  const auto family = parse_enum<ConditionalFamily>(
      cond.child("family"),
      {ConditionalFamily::TruncatedExponentialIID, ConditionalFamily::GaussianIID,
       ConditionalFamily::GenericCanonical},
      [](ConditionalFamily f) { return to_string(f); });
  const auto link = parse_enum<LinkKind>(
      cond.child("link"),
      {LinkKind::ExponentialRate, LinkKind::ExponentialMean, LinkKind::Gaussian, LinkKind::Identity},
      [](LinkKind k) { return to_string(k); });
  std::vector<Statistic> features;
  if (const auto f = cond.find("features")) {
    for (const auto& e : f->elements()) features.push_back(statistic_at(e));
  }
  const auto hyper = parse_hyperprior(root.child("hyperprior"));
  return anchored(cond, [&] { return HierarchicalModel(box, hyper, link, family, features); });
}

MomentConstraintSet parse_moments(const Node& n) {
  n.require_object({"features", "targets"});
  MomentConstraintSet c;
  for (const auto& e : n.child("features").elements()) c.features.push_back(statistic_at(e));
  const auto targets = n.child("targets");
  c.targets = targets.numbers();
  if (c.targets.size() != c.features.size()) targets.fail("need one target per feature");
  return c;
}

BinProblem parse_bin_problem(const Node& n) {
  n.require_object({"axes", "states", "prior", "statistic", "edges", "values", "targets"});
  const Statistic statistic = statistic_at(n.child("statistic"));

  std::optional<WeightedDiscreteModel> model;
  if (n.has("axes")) {
    if (n.has("states") || n.has("prior")) n.fail("give either axes or states/prior");
    std::vector<std::vector<double>> axes;
    const auto axes_node = n.child("axes");
    for (const auto& a : axes_node.elements()) axes.push_back(a.numbers());
    model = anchored(axes_node, [&] { return WeightedDiscreteModel::grid(axes, statistic); });
  } else {
    std::vector<State> states;
    const auto states_node = n.child("states");
    for (const auto& s : states_node.elements()) states.push_back(s.numbers());
    std::vector<double> prior(states.size(), states.empty() ? 0.0 : 1.0 / states.size());
    std::optional<Node> prior_node = n.find("prior");
    if (prior_node) prior = prior_node->numbers();
    model = anchored(prior_node ? *prior_node : states_node,
                     [&] { return WeightedDiscreteModel(states, prior, statistic); });
  }

  BinConstraintSet c{statistic, {}, {}, false};
  if (n.has("edges") == n.has("values")) n.fail("give exactly one of edges or values");
  const auto bins_node = n.has("edges") ? n.child("edges") : n.child("values");
  c.bin_edges = bins_node.numbers();
  c.discrete_values = n.has("values");
  if (!c.discrete_values && c.bin_edges.size() < 2) bins_node.fail("need at least two edges");
  const auto targets = n.child("targets");
  c.target_probs = targets.numbers();
  if (c.target_probs.size() != c.bin_count()) targets.fail("need one target per bin");
  anchored(bins_node, [&] { return assign_bins(*model, c); });
  return BinProblem{std::move(*model), std::move(c)};
}

QuadratureSpec parse_quadrature(const Node& n) {
  n.require_object({"rule", "rel_tol", "max_depth"});
  QuadratureSpec q;
  if (const auto r = n.find("rule")) {
    q.rule = parse_enum<QuadratureSpec::Rule>(
        *r, {QuadratureSpec::Rule::AdaptiveSimpson, QuadratureSpec::Rule::TensorGrid},
        [](QuadratureSpec::Rule v) { return to_string(v); });
  }
  if (const auto t = n.find("rel_tol")) q.rel_tol = t->number();
  if (const auto d = n.find("max_depth")) {
    q.max_depth = static_cast<int>(std::min<std::uint64_t>(d->unsigned_integer(), 1000));
  }
  anchored(n, [&] {
    q.validate();
    return 0;
  });
  return q;
}

}  // namespace

Statistic statistic_from_name(const std::string& name) {
  if (name == "mean") return Statistic::mean();
  if (name == "sum") return Statistic::sum();
  if (name == "sum_of_squares") return Statistic::sum_of_squares();
  throw InvalidArgument("unknown statistic \"" + name + "\" (mean, sum, sum_of_squares)");
}

ModelConfig parse_config(std::string_view text) {
  const Parsed parsed = parse_tracked(text);
  const Node root(parsed.doc, "", parsed.lines);
  root.require_object({"schema", "box", "conditional", "hyperprior", "statistics", "moments",
                       "bin_constraints", "quadrature", "samples", "seed", "bins"});
  const auto schema = root.child("schema");
  if (schema.string() != kConfigSchema) {
    schema.fail("unsupported schema \"" + schema.string() + "\" (expected " +
                std::string(kConfigSchema) + ")");
  }

  ModelConfig c;
  c.source = parsed.doc;
  if (const auto b = root.find("box")) c.box = parse_box(*b);
  if (root.has("conditional") || root.has("hyperprior")) {
    if (!c.box) root.fail("conditional models need a box");
    c.model = parse_model(root, *c.box);
  }
  if (const auto s = root.find("statistics")) {
    for (const auto& e : s->elements()) {
      e.require_object({"statistic", "transform"});
      StatisticSpec spec{statistic_at(e.child("statistic")), Transform::Identity};
      if (const auto t = e.find("transform")) {
        spec.transform = parse_enum<Transform>(*t, {Transform::Identity, Transform::Log},
                                               [](Transform v) { return to_string(v); });
      }
      c.statistics.push_back(spec);
    }
  }
  if (const auto m = root.find("moments")) {
    if (!c.box) m->fail("moment constraints need a box");
    c.moments = parse_moments(*m);
  }
  if (const auto b = root.find("bin_constraints")) c.bin_problem = parse_bin_problem(*b);
  if (const auto q = root.find("quadrature")) c.quadrature = parse_quadrature(*q);
  if (const auto s = root.find("samples")) c.samples = s->positive_count();
  if (const auto s = root.find("seed")) c.seed = s->unsigned_integer();
  if (const auto b = root.find("bins")) c.bins = b->positive_count();
  return c;
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  if (in.bad()) throw IoError("cannot read config " + path.string());
  return parse_config(text.str());
}

}  // namespace maxent::cli
