#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <string_view>

#include "preval/data.hpp"
#include "preval/error.hpp"

namespace preval::data {

namespace {

using Row = std::vector<std::string>;

// Splits one CSV record. Handles double-quoted fields with "" escapes; quoted
// fields may not span lines.
Row split_record(std::string_view line, std::size_t line_no) {
  Row fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw DataError("line " + std::to_string(line_no) + ": unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct Table {
  Row header;
  std::vector<Row> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    Row r = split_record(line, line_no);
    for (auto& f : r) f = std::string(trim(f));
    if (t.header.empty()) {
      t.header = std::move(r);
      continue;
    }
    if (r.size() != t.header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                      " fields, found " + std::to_string(r.size()));
    t.rows.push_back(std::move(r));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw DataError("CSV input has no header row");
  return t;
}

std::size_t column_of(const Row& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("column '" + name + "' not found in CSV header");
  return static_cast<std::size_t>(it - header.begin());
}

RawDataset build(const Table& t, const CsvSchema& schema) {
  const std::size_t label_col = column_of(t.header, schema.label_column);
  std::vector<std::size_t> source;
  for (const auto& spec : schema.columns) source.push_back(column_of(t.header, spec.name));

  RawDataset ds;
  ds.schema = schema;
  const Index n = static_cast<Index>(t.rows.size());
  ds.x = Matrix::Zero(n, schema.width());
  ds.labels.reserve(t.rows.size());
  for (Index i = 0; i < n; ++i) {
    const Row& r = t.rows[static_cast<std::size_t>(i)];
    if (r[label_col].empty())
      throw DataError("line " + std::to_string(t.line_numbers[static_cast<std::size_t>(i)]) +
                      ": empty label in column '" + schema.label_column + "'");
    ds.labels.push_back(r[label_col]);
    Index out_col = 0;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const ColumnSpec& spec = schema.columns[c];
      const std::string& cell = r[source[c]];
      if (spec.kind == ColumnKind::numeric) {
        double v = 0.0;
        if (!parse_double(cell, v))
          throw DataError("line " + std::to_string(t.line_numbers[static_cast<std::size_t>(i)]) +
                          ", column '" + spec.name + "': cannot parse '" + cell + "' as a number");
        ds.x(i, out_col++) = v;
      } else {
        // Levels unseen at training time map to an all-zero indicator block.
        const auto it = std::find(spec.levels.begin(), spec.levels.end(), cell);
        if (it != spec.levels.end()) ds.x(i, out_col + (it - spec.levels.begin())) = 1.0;
        out_col += static_cast<Index>(spec.levels.size());
      }
    }
  }
  return ds;
}

void write_field(std::ostream& out, const std::string& field) {
  if (field.find_first_of(",\"") == std::string::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char ch : field) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

}  // namespace

Index CsvSchema::width() const {
  Index w = 0;
  for (const auto& c : columns)
    w += c.kind == ColumnKind::numeric ? 1 : static_cast<Index>(c.levels.size());
  return w;
}

std::vector<std::string> CsvSchema::feature_names() const {
  std::vector<std::string> names;
  for (const auto& c : columns) {
    if (c.kind == ColumnKind::numeric) {
      names.push_back(c.name);
    } else {
      for (const auto& level : c.levels) names.push_back(c.name + "=" + level);
    }
  }
  return names;
}

RawDataset read_csv(std::istream& in, const CsvOptions& options) {
  const Table t = read_table(in);
  CsvSchema schema;
  schema.label_column = options.label_column.empty() ? t.header.back() : options.label_column;
  const std::size_t label_col = column_of(t.header, schema.label_column);
  for (const auto& forced : options.categorical) column_of(t.header, forced);

  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == label_col) continue;
    ColumnSpec spec{t.header[c], ColumnKind::numeric, {}};
    bool categorical = std::find(options.categorical.begin(), options.categorical.end(), spec.name) !=
                       options.categorical.end();
    if (!categorical) {
      double v = 0.0;
      for (const auto& r : t.rows)
        if (!parse_double(r[c], v)) {
          categorical = true;
          break;
        }
    }
    if (categorical) {
      spec.kind = ColumnKind::categorical;
      std::set<std::string> levels;
      for (const auto& r : t.rows) levels.insert(r[c]);
      spec.levels.assign(levels.begin(), levels.end());
    }
    schema.columns.push_back(std::move(spec));
  }
  return build(t, schema);
}

RawDataset read_csv(std::istream& in, const CsvSchema& schema) { return build(read_table(in), schema); }

RawDataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in, options);
}

RawDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Eigen::Ref<const Matrix>& x, const LabelVector& labels,
               const std::string& label_column) {
  if (static_cast<Index>(labels.size()) != x.rows())
    throw DimensionError("label count does not match the number of rows");
  for (Index j = 0; j < x.cols(); ++j) out << 'f' << j << ',';
  write_field(out, label_column);
  out << '\n';
  char buf[64];
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const auto res = std::to_chars(buf, buf + sizeof(buf), x(i, j));
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    write_field(out, labels[static_cast<std::size_t>(i)]);
    out << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const Eigen::Ref<const Matrix>& x, const LabelVector& labels,
              const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  write_csv(out, x, labels, label_column);
}

}  // namespace preval::data
