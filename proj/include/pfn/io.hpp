// io.hpp -- the .pfn text format, inventory files, and report rendering.
//
// Grammar (whitespace-separated tokens, `#` comments to end of line):
//
//   pfn 1
//   parties N
//   in s1 ... sN
//   out s1 ... sN
//   w i : v1 v2 ... vM     (N lines, M = prod over j != i of out_j,
//                           values in rank order of x-without-i)

#pragma once

#include <cctype>
#include <fstream>
#include <ostream>
#include <sstream>

#include "pfn/search.hpp"

namespace pfn {

/// Diagnostic tagged with a source position.
class ParseError : public Error {
public:
  ParseError(std::string file, int line, int column, const std::string& message)
      : Error((file.empty() ? "" : file + ":") + std::to_string(line) + ":" +
              std::to_string(column) + ": " + message),
        file_(std::move(file)), line_(line), column_(column) {}

  const std::string& file() const { return file_; }
  int line() const { return line_; }
  int column() const { return column_; }

private:
  std::string file_;
  int line_;
  int column_;
};

/// One parsed .pfn document.  serialize() then parse_pfn() is the identity.
struct PfnDocument {
  int version = 1;
  ProcessTable table;
  std::vector<std::string> comments;

  friend bool operator==(const PfnDocument&, const PfnDocument&) = default;
};

namespace detail {

struct Token {
  std::string text;
  int line = 0;
  int column = 0;
};

class PfnScanner {
public:
  PfnScanner(std::string_view text, std::string_view filename)
      : text_(text), file_(filename) {}

  // Next token, skipping comments (which are collected).
  std::optional<Token> next() {
    for (;;) {
      skip_blanks();
      if (pos_ >= text_.size()) return std::nullopt;
      if (text_[pos_] == '#') {
        std::size_t start = pos_ + 1;
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
        std::string comment(text_.substr(start, pos_ - start));
        if (!comment.empty() && comment.front() == ' ') comment.erase(comment.begin());
        comments.push_back(std::move(comment));
        continue;
      }
      Token tok;
      tok.line = line_;
      tok.column = column_;
      std::size_t start = pos_;
      while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
             text_[pos_] != '#') {
        ++pos_;
        ++column_;
      }
      tok.text = std::string(text_.substr(start, pos_ - start));
      return tok;
    }
  }

  Token expect(const char* what) {
    auto tok = next();
    if (!tok) throw ParseError(std::string(file_), line_, column_,
                               std::string("unexpected end of input, expected ") + what);
    return *tok;
  }

  [[noreturn]] void fail(const Token& at, const std::string& message) const {
    throw ParseError(std::string(file_), at.line, at.column, message);
  }

  int int_token(const char* what) {
    Token tok = expect(what);
    return to_int(tok, what);
  }

  int to_int(const Token& tok, const char* what) const {
    if (tok.text.empty() || tok.text.find_first_not_of("0123456789") != std::string::npos)
      fail(tok, std::string("expected ") + what + ", got '" + tok.text + "'");
    long long v = 0;
    for (char c : tok.text) {
      v = v * 10 + (c - '0');
      if (v > std::numeric_limits<int>::max())
        fail(tok, std::string(what) + " out of range: '" + tok.text + "'");
    }
    return static_cast<int>(v);
  }

  std::string_view file() const { return file_; }
  int line() const { return line_; }
  int column() const { return column_; }

  std::vector<std::string> comments;

private:
  void skip_blanks() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
      ++pos_;
    }
  }

  std::string_view text_;
  std::string_view file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

inline PfnDocument parse_one(PfnScanner& scanner, const Token& header,
                             std::size_t comment_base) {
  if (header.text != "pfn")
    scanner.fail(header, "bad header: expected 'pfn 1', got '" + header.text + "'");
  const Token version = scanner.expect("format version");
  if (version.text != "1")
    scanner.fail(version, "unsupported format version '" + version.text + "'");

  Token parties = scanner.expect("'parties'");
  if (parties.text != "parties") scanner.fail(parties, "expected 'parties', got '" + parties.text + "'");
  const int n = scanner.int_token("region count");
  if (n < 1) scanner.fail(parties, "need at least one region");

  auto size_line = [&](const char* keyword) {
    Token kw = scanner.expect(keyword);
    if (kw.text != keyword)
      scanner.fail(kw, std::string("expected '") + keyword + "', got '" + kw.text + "'");
    std::vector<int> sizes;
    for (int i = 0; i < n; ++i) {
      const int s = scanner.int_token("alphabet size");
      if (s < 1) scanner.fail(kw, "alphabet sizes must be >= 1");
      sizes.push_back(s);
    }
    return sizes;
  };
  std::vector<int> in_sizes = size_line("in");
  std::vector<int> out_sizes = size_line("out");
  ProcessShape shape(std::move(in_sizes), std::move(out_sizes));

  std::vector<std::vector<int>> components(static_cast<std::size_t>(n));
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int row = 0; row < n; ++row) {
    Token kw = scanner.expect("'w'");
    if (kw.text != "w") scanner.fail(kw, "expected 'w', got '" + kw.text + "'");
    Token region_tok = scanner.expect("region index");
    const int region = scanner.to_int(region_tok, "region index");
    if (region < 1 || region > n)
      scanner.fail(region_tok, "region index " + region_tok.text + " out of range 1.." +
                                   std::to_string(n));
    if (seen[static_cast<std::size_t>(region - 1)])
      scanner.fail(region_tok, "duplicate region " + region_tok.text);
    seen[static_cast<std::size_t>(region - 1)] = true;
    Token colon = scanner.expect("':'");
    if (colon.text != ":") scanner.fail(colon, "expected ':' after region index");

    const auto want = ProcessTable::domain_size_for(shape, region - 1);
    const int limit = shape.in_sizes[static_cast<std::size_t>(region - 1)];
    std::vector<int> values;
    values.reserve(want);
    for (std::uint64_t k = 0; k < want; ++k) {
      auto tok = scanner.next();
      if (!tok || tok->text == "w" || tok->text == "pfn")
        throw ParseError(std::string(scanner.file()), kw.line, kw.column,
                         "w " + std::to_string(region) + ": expected " + std::to_string(want) +
                             " values, got " + std::to_string(k));
      const int v = scanner.to_int(*tok, "table value");
      if (v >= limit)
        scanner.fail(*tok, "w " + std::to_string(region) + ": value " + tok->text +
                               " out of range [0," + std::to_string(limit) + ")");
      values.push_back(v);
    }
    components[static_cast<std::size_t>(region - 1)] = std::move(values);
  }

  PfnDocument doc;
  doc.table = ProcessTable(std::move(shape), std::move(components));
  doc.comments.assign(scanner.comments.begin() + static_cast<std::ptrdiff_t>(comment_base),
                      scanner.comments.end());
  return doc;
}

} // namespace detail

/// All documents in a stream of concatenated .pfn texts.  Comments attach to
/// the document they precede or sit inside; trailing comments to the last.
inline std::vector<PfnDocument> parse_pfn_stream(std::string_view text,
                                                 std::string_view filename = "") {
  detail::PfnScanner scanner(text, filename);
  std::vector<PfnDocument> docs;
  std::size_t claimed = 0;
  while (auto tok = scanner.next()) {
    docs.push_back(detail::parse_one(scanner, *tok, claimed));
    claimed = scanner.comments.size();
  }
  if (!docs.empty() && claimed < scanner.comments.size())
    docs.back().comments.insert(docs.back().comments.end(),
                                scanner.comments.begin() + static_cast<std::ptrdiff_t>(claimed),
                                scanner.comments.end());
  return docs;
}

/// Exactly one document.
inline PfnDocument parse_pfn(std::string_view text, std::string_view filename = "") {
  auto docs = parse_pfn_stream(text, filename);
  if (docs.empty())
    throw ParseError(std::string(filename), 1, 1, "empty input, expected 'pfn 1'");
  if (docs.size() > 1)
    throw ParseError(std::string(filename), 1, 1,
                     "expected a single document, found " + std::to_string(docs.size()));
  return std::move(docs.front());
}

inline std::string serialize(const PfnDocument& doc) {
  std::string out = "pfn " + std::to_string(doc.version) + "\n";
  for (const auto& comment : doc.comments)
    out += comment.empty() ? "#\n" : "# " + comment + "\n";
  out += serialize_body(doc.table);
  return out;
}

inline std::string to_hex(std::string_view bytes) {
  static const char digits[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    hex.push_back(digits[c >> 4]);
    hex.push_back(digits[c & 15]);
  }
  return hex;
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

/// One-variable restriction as a readable expression.  Binary tables render
/// as 0, 1, x_j or x_j + 1 (addition mod 2); anything else as a value list.
inline std::string render_restriction(const std::vector<int>& values, int vary_region) {
  const std::string var = "x_" + std::to_string(vary_region + 1);
  if (detail::is_constant(values)) return std::to_string(values.front());
  if (values.size() == 2) {
    if (values[0] == 0 && values[1] == 1) return var;
    if (values[0] == 1 && values[1] == 0) return var + " + 1";
  }
  std::string list = "[";
  for (std::size_t i = 0; i < values.size(); ++i)
    list += (i ? " " : "") + std::to_string(values[i]);
  return list + "]";
}

inline std::string render_direction(const SignalDirection& direction) {
  if (!direction) return "No signalling";
  return std::to_string(direction->first + 1) + " signals to " +
         std::to_string(direction->second + 1);
}

/// Text table with one row per freeze: the frozen outputs, both restricted
/// inputs, and the surviving direction of signalling.
inline std::string render_signalling_table(const ConditionalSignallingTable& table) {
  std::vector<std::string> header;
  for (int r : table.frozen_regions)
    header.push_back("Output of region " + std::to_string(r + 1) + " (x_" +
                     std::to_string(r + 1) + ")");
  header.push_back("Input of region " + std::to_string(table.region_l + 1) + " (a_" +
                   std::to_string(table.region_l + 1) + ")");
  header.push_back("Input of region " + std::to_string(table.region_j + 1) + " (a_" +
                   std::to_string(table.region_j + 1) + ")");
  header.push_back("Direction of signalling");

  std::vector<std::vector<std::string>> rows;
  for (const auto& row : table.rows) {
    std::vector<std::string> cells;
    for (int v : row.freeze) cells.push_back(std::to_string(v));
    cells.push_back(render_restriction(row.restriction_l, table.region_j));
    cells.push_back(render_restriction(row.restriction_j, table.region_l));
    cells.push_back(render_direction(row.direction));
    rows.push_back(std::move(cells));
  }

  std::vector<std::size_t> width(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::string out;
  auto emit_row = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) out += " | ";
      out += cells[c];
      if (c + 1 < cells.size()) out.append(width[c] - cells[c].size(), ' ');
    }
    out += "\n";
  };
  emit_row(header);
  for (const auto& row : rows) emit_row(row);
  return out;
}

/// Inventory file: a header line, then one class per line (canonical key in
/// hex, members encountered, causal flags), sorted by key.
inline std::string render_inventory(const ClassInventory& inv) {
  std::string out = "pfn-inventory 1\n";
  for (const auto& [key, record] : inv.classes) {
    std::string flags;
    auto add_flag = [&](const char* name) {
      if (!flags.empty()) flags += ",";
      flags += name;
    };
    if (record.diagnosis.fixed_order) add_flag("causal-fixed");
    if (record.diagnosis.dynamically_causal) add_flag("causal-dynamic");
    if (record.diagnosis.genuinely_non_causal) add_flag("genuine-noncausal");
    if (flags.empty()) flags = "-";
    out += to_hex(key) + " " + std::to_string(record.count) + " " + flags + "\n";
  }
  return out;
}

inline void write_inventory(const ClassInventory& inv, std::ostream& os) {
  os << render_inventory(inv);
}

inline void write_inventory(const ClassInventory& inv, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_inventory(inv, os);
  if (!os) throw Error("failed writing inventory to '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

} // namespace pfn
