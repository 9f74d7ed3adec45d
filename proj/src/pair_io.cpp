#include "broyden/pair_io.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace broyden {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

double parse_double(std::string_view token, std::size_t line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && token.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw Error(ErrorKind::ParseError, "not a number: '" + std::string(token) + "'", line);
  return value;
}

long long parse_int(std::string_view token, std::size_t line) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw Error(ErrorKind::ParseError, "not an integer: '" + std::string(token) + "'", line);
  return value;
}

// Line reader that skips blank lines and tracks 1-based line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string_view>& tokens) {
    while (std::getline(in_, buffer_)) {
      ++line_;
      tokens = split_ws(buffer_);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::string buffer_;
  std::size_t line_ = 0;
};

Vector<double> read_vector_line(LineReader& reader, Eigen::Index n, const char* what) {
  std::vector<std::string_view> tokens;
  if (!reader.next(tokens))
    throw Error(ErrorKind::SchemaError,
                std::string("unexpected end of file, expected ") + what, reader.line() + 1);
  if (static_cast<Eigen::Index>(tokens.size()) != n)
    throw Error(ErrorKind::ParseError,
                std::string(what) + ": expected " + std::to_string(n) + " values, found " +
                    std::to_string(tokens.size()),
                reader.line());
  Vector<double> v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = parse_double(tokens[i], reader.line());
  return v;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

PhiStep<double> parse_phi_token(std::string_view token, std::size_t line) {
  if (token == "sr1" || token == "SR1") return Sr1{};
  return parse_double(token, line);
}

void write_pairs(std::ostream& out, const PairSequence<double>& seq,
                 const PhiSchedule<double>& schedule) {
  if (schedule.size() != seq.size())
    throw Error(ErrorKind::SchemaError, "schedule length differs from pair count");
  out << seq.n << ' ' << seq.size() << ' ' << format_double(seq.gamma) << '\n';
  auto write_vec = [&](const Vector<double>& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) out << ' ';
      out << format_double(v(i));
    }
    out << '\n';
  };
  for (std::size_t j = 0; j < seq.size(); ++j) {
    out << "phi ";
    if (is_sr1(schedule[j]))
      out << "sr1";
    else
      out << format_double(std::get<double>(schedule[j]));
    out << '\n';
    write_vec(seq.S[j]);
    write_vec(seq.Y[j]);
  }
}

PairFile read_pairs(std::istream& in) {
  LineReader reader(in);
  std::vector<std::string_view> tokens;
  if (!reader.next(tokens)) throw Error(ErrorKind::SchemaError, "empty pair file", 1);
  if (tokens.size() != 3)
    throw Error(ErrorKind::ParseError, "header must be 'n m gamma'", reader.line());
  const long long n = parse_int(tokens[0], reader.line());
  const long long m = parse_int(tokens[1], reader.line());
  const double gamma = parse_double(tokens[2], reader.line());
  if (n <= 0 || m < 0 || !(gamma > 0.0))
    throw Error(ErrorKind::SchemaError, "header requires n > 0, m >= 0, gamma > 0",
                reader.line());

  PairFile file;
  file.pairs = PairSequence<double>(n, gamma);
  for (long long j = 0; j < m; ++j) {
    if (!reader.next(tokens))
      throw Error(ErrorKind::SchemaError,
                  "header declares " + std::to_string(m) + " pairs, found " + std::to_string(j),
                  reader.line() + 1);
    if (tokens.size() != 2 || tokens[0] != "phi")
      throw Error(ErrorKind::ParseError, "expected 'phi <float>' or 'phi sr1'", reader.line());
    file.schedule.push_back(parse_phi_token(tokens[1], reader.line()));
    Vector<double> s = read_vector_line(reader, n, "s vector");
    Vector<double> y = read_vector_line(reader, n, "y vector");
    const std::size_t line = reader.line();
    try {
      append_pair(file.pairs, file.gram, s, y);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " (pair ending at line " +
                                std::to_string(line) + ")");
    }
  }
  if (reader.next(tokens))
    throw Error(ErrorKind::SchemaError, "trailing content after declared pairs", reader.line());
  return file;
}

void save_pairs(const PairSequence<double>& seq, const PhiSchedule<double>& schedule,
                const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot open for writing: " + path.string());
  write_pairs(out, seq, schedule);
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

PairFile load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open for reading: " + path.string());
  return read_pairs(in);
}

Vector<double> load_vector(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open for reading: " + path.string());
  LineReader reader(in);
  std::vector<double> values;
  std::vector<std::string_view> tokens;
  while (reader.next(tokens))
    for (auto t : tokens) values.push_back(parse_double(t, reader.line()));
  return Eigen::Map<Vector<double>>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void save_vector(const Vector<double>& v, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot open for writing: " + path.string());
  for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v(i)) << '\n';
}

PhiSchedule<double> load_schedule(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open for reading: " + path.string());
  LineReader reader(in);
  PhiSchedule<double> schedule;
  std::vector<std::string_view> tokens;
  while (reader.next(tokens))
    for (auto t : tokens) schedule.push_back(parse_phi_token(t, reader.line()));
  return schedule;
}

}  // namespace broyden
