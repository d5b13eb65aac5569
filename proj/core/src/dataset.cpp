#include "npjive/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "npjive/rng.hpp"

namespace npjive {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back("");
  return fields;
}

double parse_double(const std::string& token, long row, const std::string& column) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto result = std::from_chars(begin, end, value, std::chars_format::general);
  if (result.ec != std::errc() || result.ptr != end)
    throw InputError("row " + std::to_string(row) + ": cannot parse '" + token +
                     "' in column " + column);
  if (!std::isfinite(value))
    throw InputError("row " + std::to_string(row) + ": non-finite value in column " + column);
  return value;
}

std::vector<std::string> read_nonempty_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty()) lines.push_back(t);
  }
  return lines;
}

int expect_s_columns(const std::vector<std::string>& header, std::size_t offset,
                     const std::string& path) {
  const int d = static_cast<int>(header.size() - offset);
  if (d < 1) throw InputError(path + ": header declares no s_* columns");
  for (int j = 0; j < d; ++j) {
    const std::string want = "s_" + std::to_string(j);
    if (header[offset + static_cast<std::size_t>(j)] != want)
      throw InputError(path + ": expected header column '" + want + "', got '" +
                       header[offset + static_cast<std::size_t>(j)] + "'");
  }
  return d;
}

void format_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

void HistoricalDataset::validate() const {
  if (num_arms < 1) throw InputError("dataset has no arms");
  if (per_arm < 1) throw InputError("dataset has no units per arm");
  const int n_rows = rows();
  if (n_rows != num_arms * per_arm)
    throw InputError("dataset row count does not equal arms * units-per-arm");
  if (Y.size() != n_rows || static_cast<int>(arm.size()) != n_rows)
    throw InputError("dataset column lengths disagree");
  std::vector<int> counts(static_cast<std::size_t>(num_arms), 0);
  for (int i = 0; i < n_rows; ++i) {
    if (arm[static_cast<std::size_t>(i)] < 0 || arm[static_cast<std::size_t>(i)] >= num_arms)
      throw InputError("row " + std::to_string(i) + ": arm index out of range");
    counts[static_cast<std::size_t>(arm[static_cast<std::size_t>(i)])]++;
    if (!std::isfinite(Y(i)))
      throw InputError("row " + std::to_string(i) + ": non-finite outcome");
  }
  for (int a = 0; a < num_arms; ++a) {
    if (counts[static_cast<std::size_t>(a)] != per_arm)
      throw InputError("arm " + std::to_string(a) + " has " +
                       std::to_string(counts[static_cast<std::size_t>(a)]) +
                       " units, expected " + std::to_string(per_arm));
  }
  if (!S.allFinite()) throw InputError("dataset has non-finite s values");
  if (has_folds()) {
    if (static_cast<int>(fold.size()) != n_rows)
      throw InputError("fold labels have wrong length");
    // every arm-fold cell must have identical size
    std::vector<int> cell(static_cast<std::size_t>(num_arms * num_folds), 0);
    for (int i = 0; i < n_rows; ++i) {
      const int v = fold[static_cast<std::size_t>(i)];
      if (v < 0 || v >= num_folds)
        throw InputError("row " + std::to_string(i) + ": fold label out of range");
      cell[static_cast<std::size_t>(arm[static_cast<std::size_t>(i)] * num_folds + v)]++;
    }
    const int want = per_arm / num_folds;
    for (int c = 0; c < num_arms * num_folds; ++c)
      if (cell[static_cast<std::size_t>(c)] != want)
        throw InputError("arm-fold cells are not of equal size");
  }
}

void NovelDataset::validate() const {
  if (rows() < 1) throw InputError("novel dataset has no rows");
  if (!S.allFinite()) throw InputError("novel dataset has non-finite s values");
}

FoldPlan make_fold_plan(const HistoricalDataset& data, int num_folds, std::uint64_t seed) {
  if (num_folds != 2 && num_folds != 4)
    throw InputError("assign_folds: num_folds must be 2 or 4");
  FoldPlan plan;
  plan.num_folds = num_folds;
  plan.seed = seed;
  plan.arm_order = rows_by_arm(data);
  for (int a = 0; a < data.num_arms; ++a) {
    Rng rng = Rng::derive(seed, {0x666f6c64ULL, static_cast<std::uint64_t>(a)});
    rng.shuffle(plan.arm_order[static_cast<std::size_t>(a)]);
  }
  return plan;
}

HistoricalDataset assign_folds(const HistoricalDataset& data, int num_folds,
                               std::uint64_t seed) {
  data.validate();
  const FoldPlan plan = make_fold_plan(data, num_folds, seed);
  const int keep_per_arm = (data.per_arm / num_folds) * num_folds;
  if (keep_per_arm == 0)
    throw InputError("assign_folds: fewer units per arm than folds");
  const int cell = keep_per_arm / num_folds;
  const int dropped = (data.per_arm - keep_per_arm) * data.num_arms;

  std::vector<int> new_fold(static_cast<std::size_t>(data.rows()), -1);
  for (int a = 0; a < data.num_arms; ++a) {
    const auto& order = plan.arm_order[static_cast<std::size_t>(a)];
    for (int pos = 0; pos < keep_per_arm; ++pos)
      new_fold[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos / cell;
  }

  HistoricalDataset out;
  out.num_arms = data.num_arms;
  out.per_arm = keep_per_arm;
  out.num_folds = num_folds;
  out.arm_labels = data.arm_labels;
  out.meta = data.meta;
  out.meta["dropped_rows"] = static_cast<double>(dropped);
  const int kept_rows = keep_per_arm * data.num_arms;
  out.S.resize(kept_rows, data.dim());
  out.Y.resize(kept_rows);
  out.arm.reserve(static_cast<std::size_t>(kept_rows));
  out.fold.reserve(static_cast<std::size_t>(kept_rows));
  int next = 0;
  for (int i = 0; i < data.rows(); ++i) {
    if (new_fold[static_cast<std::size_t>(i)] < 0) continue;  // dropped by truncation
    out.S.row(next) = data.S.row(i);
    out.Y(next) = data.Y(i);
    out.arm.push_back(data.arm[static_cast<std::size_t>(i)]);
    out.fold.push_back(new_fold[static_cast<std::size_t>(i)]);
    ++next;
  }
  out.validate();
  return out;
}

HistoricalDataset restrict_to_folds(const HistoricalDataset& data,
                                    const std::vector<int>& folds) {
  data.validate();
  if (!data.has_folds()) throw InputError("restrict_to_folds: dataset has no fold labels");
  if (!data.source_folds.empty())
    throw InputError("restrict_to_folds: dataset is already a fold restriction");
  std::vector<int> relabel(static_cast<std::size_t>(data.num_folds), -1);
  for (std::size_t v = 0; v < folds.size(); ++v) {
    if (folds[v] < 0 || folds[v] >= data.num_folds)
      throw InputError("restrict_to_folds: fold label out of range");
    relabel[static_cast<std::size_t>(folds[v])] = static_cast<int>(v);
  }

  HistoricalDataset out;
  out.num_arms = data.num_arms;
  out.num_folds = static_cast<int>(folds.size());
  out.per_arm = (data.per_arm / data.num_folds) * out.num_folds;
  out.source_folds = folds;
  out.arm_labels = data.arm_labels;
  out.meta = data.meta;
  const int kept_rows = out.per_arm * out.num_arms;
  out.S.resize(kept_rows, data.dim());
  out.Y.resize(kept_rows);
  int next = 0;
  for (int i = 0; i < data.rows(); ++i) {
    const int v = relabel[static_cast<std::size_t>(data.fold[static_cast<std::size_t>(i)])];
    if (v < 0) continue;
    out.S.row(next) = data.S.row(i);
    out.Y(next) = data.Y(i);
    out.arm.push_back(data.arm[static_cast<std::size_t>(i)]);
    out.fold.push_back(v);
    ++next;
  }
  out.validate();
  return out;
}

std::vector<std::vector<int>> rows_by_arm(const HistoricalDataset& data) {
  std::vector<std::vector<int>> by_arm(static_cast<std::size_t>(data.num_arms));
  for (auto& v : by_arm) v.reserve(static_cast<std::size_t>(data.per_arm));
  for (int i = 0; i < data.rows(); ++i)
    by_arm[static_cast<std::size_t>(data.arm[static_cast<std::size_t>(i)])].push_back(i);
  return by_arm;
}

std::vector<int> rows_in_fold(const HistoricalDataset& data, int fold_label) {
  std::vector<int> out;
  for (int i = 0; i < data.rows(); ++i)
    if (data.fold[static_cast<std::size_t>(i)] == fold_label) out.push_back(i);
  return out;
}

HistoricalDataset load_historical_csv(const std::string& path) {
  const std::vector<std::string> lines = read_nonempty_lines(path);
  if (lines.empty()) throw InputError(path + ": no rows");
  const std::vector<std::string> header = split_csv_line(lines[0]);
  if (header.size() < 3 || header[0] != "arm" || header[1] != "y")
    throw InputError(path + ": expected header 'arm,y,s_0..'");
  const int d = expect_s_columns(header, 2, path);
  const long n_rows = static_cast<long>(lines.size()) - 1;
  if (n_rows < 1) throw InputError(path + ": no rows");

  HistoricalDataset out;
  out.S.resize(n_rows, d);
  out.Y.resize(n_rows);
  out.arm.resize(static_cast<std::size_t>(n_rows));
  std::unordered_map<std::string, int> label_to_id;
  for (long r = 0; r < n_rows; ++r) {
    const std::vector<std::string> fields = split_csv_line(lines[static_cast<std::size_t>(r + 1)]);
    if (static_cast<int>(fields.size()) != d + 2)
      throw InputError(path + ": row " + std::to_string(r) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(d + 2));
    const std::string& label = fields[0];
    auto it = label_to_id.find(label);
    if (it == label_to_id.end()) {
      it = label_to_id.emplace(label, static_cast<int>(out.arm_labels.size())).first;
      out.arm_labels.push_back(label);
    }
    out.arm[static_cast<std::size_t>(r)] = it->second;
    out.Y(r) = parse_double(fields[1], r, "y");
    for (int j = 0; j < d; ++j)
      out.S(r, j) = parse_double(fields[static_cast<std::size_t>(j + 2)], r,
                                 "s_" + std::to_string(j));
  }
  out.num_arms = static_cast<int>(out.arm_labels.size());
  std::vector<long> counts(static_cast<std::size_t>(out.num_arms), 0);
  for (long r = 0; r < n_rows; ++r)
    counts[static_cast<std::size_t>(out.arm[static_cast<std::size_t>(r)])]++;
  for (int a = 1; a < out.num_arms; ++a)
    if (counts[static_cast<std::size_t>(a)] != counts[0])
      throw InputError("arm " + std::to_string(a) + " has " +
                       std::to_string(counts[static_cast<std::size_t>(a)]) +
                       " units, expected " + std::to_string(counts[0]));
  out.per_arm = static_cast<int>(counts[0]);
  out.validate();  // re-checks equal cells and finiteness
  return out;
}

NovelDataset load_novel_csv(const std::string& path) {
  const std::vector<std::string> lines = read_nonempty_lines(path);
  if (lines.empty()) throw InputError(path + ": no rows");
  const std::vector<std::string> header = split_csv_line(lines[0]);
  const int d = expect_s_columns(header, 0, path);
  const long n_rows = static_cast<long>(lines.size()) - 1;
  if (n_rows < 1) throw InputError(path + ": no rows");
  NovelDataset out;
  out.S.resize(n_rows, d);
  for (long r = 0; r < n_rows; ++r) {
    const std::vector<std::string> fields = split_csv_line(lines[static_cast<std::size_t>(r + 1)]);
    if (static_cast<int>(fields.size()) != d)
      throw InputError(path + ": row " + std::to_string(r) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(d));
    for (int j = 0; j < d; ++j)
      out.S(r, j) = parse_double(fields[static_cast<std::size_t>(j)], r,
                                 "s_" + std::to_string(j));
  }
  out.validate();
  return out;
}

void write_historical_csv(const HistoricalDataset& data, const std::string& path) {
  data.validate();
  std::string body = "arm,y";
  for (int j = 0; j < data.dim(); ++j) body += ",s_" + std::to_string(j);
  body += "\n";
  for (int i = 0; i < data.rows(); ++i) {
    const int a = data.arm[static_cast<std::size_t>(i)];
    body += data.arm_labels.empty() ? std::to_string(a)
                                    : data.arm_labels[static_cast<std::size_t>(a)];
    body += ",";
    format_double(body, data.Y(i));
    for (int j = 0; j < data.dim(); ++j) {
      body += ",";
      format_double(body, data.S(i, j));
    }
    body += "\n";
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path);
  out << body;
}

void write_novel_csv(const NovelDataset& data, const std::string& path) {
  data.validate();
  std::string body = "s_0";
  for (int j = 1; j < data.dim(); ++j) body += ",s_" + std::to_string(j);
  body += "\n";
  for (int i = 0; i < data.rows(); ++i) {
    for (int j = 0; j < data.dim(); ++j) {
      if (j) body += ",";
      format_double(body, data.S(i, j));
    }
    body += "\n";
  }
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path);
  out << body;
}

}  // namespace npjive
