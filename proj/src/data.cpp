#include "mrtee/data.hpp"

#include "mrtee/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace mrtee {

namespace {

std::string where(std::int64_t sid, int t) {
  return "subject_id=" + std::to_string(sid) + " t=" + std::to_string(t);
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  const char* b = tok.data();
  const char* e = b + tok.size();
  if (*b == '+') ++b;
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e && std::isfinite(out);
}

template <class Int>
bool parse_int(const std::string& tok, Int& out) {
  if (tok.empty()) return false;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int RawPanel::column_index(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

double pooled_treatment_mean(const RawPanel& panel) {
  if (panel.rows() == 0) return 0.5;
  return panel.a.mean();
}

std::shared_ptr<const RawPanel> validate_panel(RawPanel panel) {
  const Eigen::Index n = panel.rows();
  if (static_cast<Eigen::Index>(panel.subject_id.size()) != n || static_cast<Eigen::Index>(panel.t.size()) != n ||
      panel.p.size() != n || panel.y.size() != n || panel.values.rows() != n ||
      panel.values.cols() != static_cast<Eigen::Index>(panel.columns.size()))
    throw Error(ErrorCode::DimensionMismatch, "panel columns have inconsistent lengths");
  for (std::size_t c = 0; c < panel.columns.size(); ++c) {
    const auto& name = panel.columns[c];
    const bool reserved = name == "subject_id" || name == "t" || name == "a" || name == "p" || name == "y";
    if (reserved || std::find(panel.columns.begin(), panel.columns.begin() + c, name) != panel.columns.begin() + c)
      throw Error(ErrorCode::ParseError, "covariate column '" + name + "' is duplicated or reserved");
  }

  for (Eigen::Index r = 0; r < n; ++r) {
    const auto sid = panel.subject_id[r];
    const int t = panel.t[r];
    bool finite = std::isfinite(panel.a[r]) && std::isfinite(panel.p[r]) && std::isfinite(panel.y[r]);
    for (Eigen::Index c = 0; c < panel.values.cols(); ++c) finite = finite && std::isfinite(panel.values(r, c));
    if (!finite) throw Error(ErrorCode::MissingValue, "non-finite value at " + where(sid, t));
    if (panel.a[r] != 0.0 && panel.a[r] != 1.0)
      throw Error(ErrorCode::NonBinaryTreatment, "a must be 0 or 1 at " + where(sid, t));
    if (!(panel.p[r] > 0.0 && panel.p[r] < 1.0))
      throw Error(ErrorCode::ProbabilityOutOfRange, "p must lie in (0,1) at " + where(sid, t));
  }

  // Canonical order: subjects by id, rows by t. Input row order then never changes a fit.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
    if (panel.subject_id[x] != panel.subject_id[y]) return panel.subject_id[x] < panel.subject_id[y];
    return panel.t[x] < panel.t[y];
  });
  bool identity = true;
  for (Eigen::Index r = 0; r < n; ++r) identity = identity && order[r] == r;
  if (!identity) {
    RawPanel sorted;
    sorted.columns = panel.columns;
    sorted.subject_id.resize(n);
    sorted.t.resize(n);
    sorted.a.resize(n);
    sorted.p.resize(n);
    sorted.y.resize(n);
    sorted.values.resize(n, panel.values.cols());
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto s = order[r];
      sorted.subject_id[r] = panel.subject_id[s];
      sorted.t[r] = panel.t[s];
      sorted.a[r] = panel.a[s];
      sorted.p[r] = panel.p[s];
      sorted.y[r] = panel.y[s];
      sorted.values.row(r) = panel.values.row(s);
    }
    panel = std::move(sorted);
  }

  int horizon = -1;
  Eigen::Index r = 0;
  while (r < n) {
    const auto sid = panel.subject_id[r];
    int expected = 1;
    Eigen::Index start = r;
    for (; r < n && panel.subject_id[r] == sid; ++r, ++expected) {
      if (panel.t[r] != expected)
        throw Error(ErrorCode::NonContiguousTime, "t must run 1,2,... without gaps at " + where(sid, panel.t[r]));
    }
    const int len = static_cast<int>(r - start);
    if (horizon < 0) horizon = len;
    if (len != horizon)
      throw Error(ErrorCode::UnbalancedPanel, "subject_id=" + std::to_string(sid) + " has " + std::to_string(len) +
                                                  " rows, expected " + std::to_string(horizon));
  }
  return std::make_shared<const RawPanel>(std::move(panel));
}

std::shared_ptr<const RawPanel> read_csv_panel(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing header row in " + path);
  const auto header = split_line(line);
  for (std::size_t c = 0; c < header.size(); ++c)
    if (std::find(header.begin(), header.begin() + c, header[c]) != header.begin() + c)
      throw Error(ErrorCode::ParseError, "duplicate column '" + header[c] + "' in " + path);
  auto find = [&](const char* name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, std::string("column '") + name + "' not found");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_sid = find("subject_id"), c_t = find("t"), c_a = find("a"), c_p = find("p"), c_y = find("y");
  std::vector<std::size_t> extra;
  RawPanel panel;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == c_sid || c == c_t || c == c_a || c == c_p || c == c_y) continue;
    extra.push_back(c);
    panel.columns.push_back(header[c]);
  }

  std::vector<double> a, p, y, vals;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto tok = split_line(line);
    if (tok.size() != header.size())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + " has " + std::to_string(tok.size()) +
                                             " fields, expected " + std::to_string(header.size()));
    std::int64_t sid;
    int t;
    if (!parse_int(tok[c_sid], sid) || !parse_int(tok[c_t], t))
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": subject_id and t must be integers");
    auto num = [&](std::size_t c) {
      double v;
      if (!parse_double(tok[c], v))
        throw Error(ErrorCode::MissingValue, "column '" + header[c] + "' missing or non-finite at " + where(sid, t));
      return v;
    };
    panel.subject_id.push_back(sid);
    panel.t.push_back(t);
    a.push_back(num(c_a));
    p.push_back(num(c_p));
    y.push_back(num(c_y));
    for (auto c : extra) vals.push_back(num(c));
  }
  const auto n = static_cast<Eigen::Index>(a.size());
  panel.a = Eigen::Map<Eigen::VectorXd>(a.data(), n);
  panel.p = Eigen::Map<Eigen::VectorXd>(p.data(), n);
  panel.y = Eigen::Map<Eigen::VectorXd>(y.data(), n);
  panel.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      vals.data(), n, static_cast<Eigen::Index>(extra.size()));
  return validate_panel(std::move(panel));
}

MrtDataset load_csv(const std::string& path, const std::vector<FeatureSpec>& schema, int lag) {
  return MrtDataset::build(read_csv_panel(path), schema, lag);
}

std::string to_csv(const RawPanel& panel) {
  std::ostringstream out;
  out << "subject_id,t,a,p,y";
  for (const auto& c : panel.columns) out << ',' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < panel.rows(); ++r) {
    out << panel.subject_id[r] << ',' << panel.t[r] << ',' << fmt_double(panel.a[r]) << ',' << fmt_double(panel.p[r])
        << ',' << fmt_double(panel.y[r]);
    for (Eigen::Index c = 0; c < panel.values.cols(); ++c) out << ',' << fmt_double(panel.values(r, c));
    out << '\n';
  }
  return out.str();
}

void write_csv(const RawPanel& panel, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << to_csv(panel);
}

MrtDataset MrtDataset::build(std::shared_ptr<const RawPanel> raw, const std::vector<FeatureSpec>& schema, int lag) {
  if (lag < 1) throw Error(ErrorCode::InvalidArgument, "lag must be >= 1");
  MrtDataset ds;
  ds.raw_ = std::move(raw);
  ds.schema_ = schema;
  ds.lag_ = lag;
  const auto& rp = *ds.raw_;
  if (rp.rows() > 0) {
    ds.horizon_ = 0;
    while (ds.horizon_ < rp.rows() && rp.subject_id[ds.horizon_] == rp.subject_id[0]) ++ds.horizon_;
    ds.n_subjects_ = static_cast<int>(rp.rows() / ds.horizon_);
    if (lag > ds.horizon_)
      throw Error(ErrorCode::LagHorizonExceeded,
                  "lag " + std::to_string(lag) + " exceeds horizon " + std::to_string(ds.horizon_));
  }
  ds.materialize();
  return ds;
}

MrtDataset MrtDataset::with_features(const std::vector<FeatureSpec>& schema) const {
  MrtDataset ds = *this;
  ds.schema_ = schema;
  ds.materialize();
  return ds;
}

MrtDataset MrtDataset::with_lag(int lag) const {
  if (lag < 1) throw Error(ErrorCode::InvalidArgument, "lag must be >= 1");
  if (n_rows() > 0 && lag > horizon_)
    throw Error(ErrorCode::LagHorizonExceeded, "lag " + std::to_string(lag) + " exceeds horizon " + std::to_string(horizon_));
  MrtDataset ds = *this;
  ds.lag_ = lag;
  ds.materialize();
  return ds;
}

MrtDataset MrtDataset::with_ptilde(const Eigen::VectorXd& p_tilde) const {
  if (p_tilde.size() != n_rows()) throw Error(ErrorCode::DimensionMismatch, "p_tilde length must equal row count");
  MrtDataset ds = *this;
  ds.p_tilde_override_ = p_tilde;
  ds.materialize();
  return ds;
}

MrtDataset MrtDataset::with_ptilde(double p_tilde) const {
  return with_ptilde(Eigen::VectorXd::Constant(n_rows(), p_tilde));
}

void MrtDataset::materialize() {
  const auto& rp = *raw_;
  const Eigen::Index n = rp.rows();

  auto gather = [&](const std::vector<std::string>& cols, bool intercept, Eigen::MatrixXd& out,
                    std::vector<std::string>& names) {
    names.clear();
    if (intercept) names.emplace_back("(intercept)");
    for (const auto& c : cols) names.push_back(c);
    out.resize(n, static_cast<Eigen::Index>(names.size()));
    Eigen::Index k = 0;
    if (intercept) out.col(k++).setOnes();
    for (const auto& c : cols) {
      int idx = rp.column_index(c);
      if (idx >= 0) {
        out.col(k++) = rp.values.col(idx);
      } else if (c == "t") {
        // the decision index itself, when no covariate shadows it
        for (Eigen::Index r = 0; r < n; ++r) out(r, k) = rp.t[r];
        ++k;
      } else {
        throw Error(ErrorCode::MissingColumn, "column '" + c + "' not found");
      }
    }
  };

  // Roles absent from the schema default to an intercept-only f and g and no auxiliaries.
  bool have_f = false, have_g = false, have_z = false;
  std::optional<std::string> ptilde_col;
  for (const auto& spec : schema_) {
    switch (spec.role) {
      case Role::moderator_f:
        if (have_f) throw Error(ErrorCode::InvalidArgument, "moderator_f given twice");
        gather(spec.source_columns, spec.intercept, f_, f_names_);
        have_f = true;
        break;
      case Role::control_g:
        if (have_g) throw Error(ErrorCode::InvalidArgument, "control_g given twice");
        gather(spec.source_columns, spec.intercept, g_, g_names_);
        have_g = true;
        break;
      case Role::auxiliary_z:
        if (have_z) throw Error(ErrorCode::InvalidArgument, "auxiliary_z given twice");
        gather(spec.source_columns, false, z_, z_names_);
        have_z = true;
        break;
      case Role::numerator_ptilde:
        if (spec.source_columns.size() != 1)
          throw Error(ErrorCode::InvalidArgument, "numerator_ptilde takes exactly one column");
        ptilde_col = spec.source_columns[0];
        break;
    }
  }
  if (!have_f) gather({}, true, f_, f_names_);
  if (!have_g) gather({}, true, g_, g_names_);
  if (!have_z) gather({}, false, z_, z_names_);

  if (p_tilde_override_) {
    p_tilde_ = *p_tilde_override_;
  } else if (ptilde_col) {
    int idx = rp.column_index(*ptilde_col);
    if (idx < 0) throw Error(ErrorCode::MissingColumn, "column '" + *ptilde_col + "' not found");
    p_tilde_ = rp.values.col(idx);
  } else {
    p_tilde_ = Eigen::VectorXd::Constant(n, pooled_treatment_mean(rp));
  }
  for (Eigen::Index r = 0; r < n; ++r)
    if (!(p_tilde_[r] > 0.0 && p_tilde_[r] < 1.0))
      throw Error(ErrorCode::ProbabilityOutOfRange, "p_tilde must lie in (0,1) at " + where(rp.subject_id[r], rp.t[r]));

  y_.resize(n);
  for (Eigen::Index r = 0; r < n; ++r)
    y_[r] = rp.t[r] <= last_usable_t() ? rp.y[r + lag_ - 1] : std::numeric_limits<double>::quiet_NaN();
}

std::uint64_t MrtDataset::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  const auto& rp = *raw_;
  const Eigen::Index n = rp.rows();
  fnv(h, rp.subject_id.data(), sizeof(std::int64_t) * rp.subject_id.size());
  fnv(h, rp.t.data(), sizeof(int) * rp.t.size());
  fnv(h, rp.a.data(), sizeof(double) * n);
  fnv(h, rp.p.data(), sizeof(double) * n);
  fnv(h, rp.y.data(), sizeof(double) * n);
  fnv(h, p_tilde_.data(), sizeof(double) * n);
  for (const auto* m : {&f_, &z_, &g_}) fnv(h, m->data(), sizeof(double) * m->size());
  for (const auto* names : {&f_names_, &z_names_, &g_names_})
    for (const auto& s : *names) fnv(h, s.data(), s.size() + 1);
  fnv(h, &lag_, sizeof lag_);
  return h;
}

DesignBlocks design_blocks(const MrtDataset& ds) {
  DesignBlocks b;
  b.f = ds.f();
  b.z = ds.z();
  b.g = ds.g();
  const auto& a = ds.a();
  const auto& p = ds.p();
  const auto& pt = ds.p_tilde();
  b.centered_a = a - pt;
  b.weight_w.resize(a.size());
  for (Eigen::Index r = 0; r < a.size(); ++r)
    b.weight_w[r] = a[r] == 1.0 ? pt[r] / p[r] : (1.0 - pt[r]) / (1.0 - p[r]);
  return b;
}

}  // namespace mrtee
