#include "nysmmd/data_io.hpp"

#include "nysmmd/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace nysmmd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string where(const std::string& source, std::size_t line, std::size_t column) {
  return source + ": line " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

Dataset parse_csv(std::istream& in, bool has_header, const std::string& source) {
  std::vector<double> values;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  std::string line;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) {
      continue;
    }
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::size_t column = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view cell = trim(rest.substr(0, comma));
      ++column;
      double v = 0.0;
      const char* begin = cell.data();
      const char* end = cell.data() + cell.size();
      if (!cell.empty() && *begin == '+') {
        ++begin;
      }
      const auto [ptr, ec] = std::from_chars(begin, end, v);
      if (cell.empty() || ec != std::errc() || ptr != end) {
        throw CsvError(where(source, line_no, column) + ": cannot parse '" + std::string(cell) +
                       "' as a number");
      }
      if (!std::isfinite(v)) {
        throw CsvError(where(source, line_no, column) + ": non-finite value");
      }
      values.push_back(v);
      if (comma == std::string_view::npos) {
        break;
      }
      rest.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      width = column;
    } else if (column != width) {
      throw CsvError(source + ": line " + std::to_string(line_no) + " has " +
                     std::to_string(column) + " fields, expected " + std::to_string(width));
    }
    ++rows;
  }
  if (rows == 0) {
    throw CsvError(source + ": no data rows");
  }
  RowMatrix m(static_cast<Index>(rows), static_cast<Index>(width));
  std::copy(values.begin(), values.end(), m.data());
  return Dataset(std::move(m));
}

Dataset load_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) {
    throw CsvError("cannot open " + path.string());
  }
  return parse_csv(in, has_header, path.string());
}

void write_csv(std::ostream& out, const Dataset& data) {
  char buf[32];
  for (Index i = 0; i < data.size(); ++i) {
    for (Index j = 0; j < data.dim(); ++j) {
      if (j > 0) {
        out << ',';
      }
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, data.points()(i, j));
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) {
    throw CsvError("cannot write " + path.string());
  }
  write_csv(out, data);
  if (!out) {
    throw CsvError("write failed for " + path.string());
  }
}

Dataset sample_correlated_gaussians(Index d, double rho, Index n, std::uint64_t seed) {
  if (d < 1 || n < 1) {
    throw std::invalid_argument("correlated Gaussian: need d >= 1 and n >= 1");
  }
  const double dd = static_cast<double>(d);
  const double low = d > 1 ? -1.0 / (dd - 1.0) : -1.0;
  if (!(rho > low && rho < 1.0)) {
    throw std::invalid_argument("correlated Gaussian: rho = " + std::to_string(rho) +
                                " makes the equicorrelation matrix indefinite (eigenvalues " +
                                std::to_string(1.0 + (dd - 1.0) * rho) + " and " +
                                std::to_string(1.0 - rho) + ")");
  }
  // S^{1/2} = sqrt(1 - rho) (I - 11'/d) + sqrt(1 + (d - 1) rho) 11'/d
  const double s_perp = std::sqrt(1.0 - rho);
  const double s_mean = d > 1 ? std::sqrt(1.0 + (dd - 1.0) * rho) : 1.0;
  Engine engine(seed);
  std::normal_distribution<double> normal;
  RowMatrix out(n, d);
  Vector z(d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      z[j] = normal(engine);
    }
    const double mean = z.mean();
    out.row(i) = (s_perp * z.array() + (s_mean - s_perp) * mean).matrix().transpose();
  }
  return Dataset(std::move(out));
}

Dataset sample_mixture(const Dataset& background, const Dataset& signal, double alpha_mix,
                       Index n, std::uint64_t seed) {
  require_same_dim(background, signal, "sample_mixture");
  if (!(alpha_mix >= 0.0 && alpha_mix <= 1.0)) {
    throw std::invalid_argument("sample_mixture: alpha_mix must lie in [0, 1]");
  }
  if (n < 1) {
    throw std::invalid_argument("sample_mixture: n must be positive");
  }
  Engine engine(seed);
  const auto shuffled = [&engine](Index size) {
    std::vector<Index> order(static_cast<std::size_t>(size));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), engine);
    return order;
  };
  const std::vector<Index> bg_order = shuffled(background.size());
  const std::vector<Index> sig_order = shuffled(signal.size());
  std::size_t bg_next = 0;
  std::size_t sig_next = 0;

  RowMatrix out(n, background.dim());
  for (Index i = 0; i < n; ++i) {
    if (uniform01(engine) < alpha_mix) {
      if (sig_next == sig_order.size()) {
        throw std::invalid_argument("sample_mixture: signal pool of " +
                                    std::to_string(signal.size()) + " rows exhausted");
      }
      out.row(i) = signal.row(sig_order[sig_next++]);
    } else {
      if (bg_next == bg_order.size()) {
        throw std::invalid_argument("sample_mixture: background pool of " +
                                    std::to_string(background.size()) + " rows exhausted");
      }
      out.row(i) = background.row(bg_order[bg_next++]);
    }
  }
  return Dataset(std::move(out));
}

}  // namespace nysmmd
