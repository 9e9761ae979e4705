#include "daur/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace daur {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void emit_matrix(std::ostringstream& os, const std::string& name, const MatrixXd& m) {
  os << name << "," << m.rows() << "," << m.cols() << "\n";
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) os << (j ? "," : "") << format_double(m(i, j));
    os << "\n";
  }
}

void emit_vector(std::ostringstream& os, const std::string& name, const VectorXd& v) {
  os << name << "," << v.size() << ",1\n";
  for (int i = 0; i < v.size(); ++i) os << format_double(v(i)) << "\n";
}

} // namespace

std::string allocation_to_csv(const Allocation& a) {
  std::ostringstream os;
  emit_matrix(os, "x", a.x);
  emit_vector(os, "phi_off", a.phi_off);
  emit_matrix(os, "gamma", a.gamma);
  emit_matrix(os, "phi_bw", a.phi_bw);
  emit_vector(os, "rho", a.rho);
  emit_matrix(os, "zeta", a.zeta);
  emit_vector(os, "psi", a.psi);
  return os.str();
}

Allocation allocation_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto read_block = [&](const std::string& want) {
    if (!std::getline(in, line))
      throw std::runtime_error("allocation_from_csv: missing section " + want);
    std::istringstream hdr(line);
    std::string name, rows_s, cols_s;
    std::getline(hdr, name, ',');
    std::getline(hdr, rows_s, ',');
    std::getline(hdr, cols_s, ',');
    if (name != want) throw std::runtime_error("allocation_from_csv: expected " + want);
    MatrixXd m(std::stoi(rows_s), std::stoi(cols_s));
    for (int i = 0; i < m.rows(); ++i) {
      if (!std::getline(in, line))
        throw std::runtime_error("allocation_from_csv: truncated " + want);
      std::istringstream row(line);
      std::string cell;
      for (int j = 0; j < m.cols(); ++j) {
        if (!std::getline(row, cell, ','))
          throw std::runtime_error("allocation_from_csv: short row in " + want);
        m(i, j) = std::stod(cell);
      }
    }
    return m;
  };
  Allocation a;
  a.x = read_block("x");
  a.phi_off = read_block("phi_off");
  a.gamma = read_block("gamma");
  a.phi_bw = read_block("phi_bw");
  a.rho = read_block("rho");
  a.zeta = read_block("zeta");
  a.psi = read_block("psi");
  return a;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sweep_chart_svg(const std::string& x_label, const std::string& y_label,
                            const std::vector<SweepSeries>& series) {
  const int w = 720, h = 480, ml = 70, mr = 150, mt = 30, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
    for (double v : s.y) { ymin = std::min(ymin, v); ymax = std::max(ymax, v); }
  }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
  os << "<rect width='100%' height='100%' fill='white'/>\n";
  os << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='" << h - mb
     << "' stroke='black'/>\n";
  os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
     << "' stroke='black'/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + k * (xmax - xmin) / 4;
    const double yv = ymin + k * (ymax - ymin) / 4;
    os << "<text x='" << px(xv) << "' y='" << h - mb + 18
       << "' font-size='11' text-anchor='middle'>" << xv << "</text>\n";
    os << "<text x='" << ml - 8 << "' y='" << py(yv) + 4
       << "' font-size='11' text-anchor='end'>" << yv << "</text>\n";
  }
  os << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 10
     << "' font-size='13' text-anchor='middle'>" << x_label << "</text>\n";
  os << "<text x='18' y='" << (mt + h - mb) / 2
     << "' font-size='13' text-anchor='middle' transform='rotate(-90 18 "
     << (mt + h - mb) / 2 << ")'>" << y_label << "</text>\n";
  int ci = 0;
  for (const auto& s : series) {
    const char* col = colors[ci % 6];
    os << "<polyline fill='none' stroke='" << col << "' stroke-width='2' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << px(s.x[i]) << "," << py(s.y[i]) << " ";
    os << "'/>\n";
    os << "<text x='" << w - mr + 10 << "' y='" << mt + 16 * ci + 12 << "' font-size='12' fill='"
       << col << "'>" << s.label << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  return os.str();
}

} // namespace daur
