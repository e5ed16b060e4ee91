#include "adco/checkpoint.hpp"

#include <cassert>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "adco/errors.hpp"

namespace adco {
namespace {

void write_double(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  assert(ec == std::errc{});
  out.append(buf, ptr);
}

void write_tensor(std::ofstream& out, const std::string& name, const Matrix& m) {
  out << "tensor " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  std::string line;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    line.clear();
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c > 0) line.push_back(' ');
      write_double(line, m.at(r, c));
    }
    line.push_back('\n');
    out << line;
  }
}

struct Reader {
  std::ifstream in;
  std::string path;

  explicit Reader(const std::string& p) : in(p), path(p) {
    if (!in) throw IoError("checkpoint: cannot open " + p);
  }

  std::string token() {
    std::string t;
    if (!(in >> t)) throw ParseError("checkpoint " + path + ": unexpected end of file");
    return t;
  }
  std::size_t count() {
    std::size_t v;
    if (!(in >> v)) throw ParseError("checkpoint " + path + ": expected a count");
    return v;
  }
  double real() {
    double v;
    if (!(in >> v)) throw ParseError("checkpoint " + path + ": expected a number");
    return v;
  }
  void expect(const std::string& want) {
    const std::string got = token();
    if (got != want)
      throw ParseError("checkpoint " + path + ": expected '" + want + "', got '" + got + "'");
  }
  Matrix tensor(const std::string& want_name) {
    expect("tensor");
    expect(want_name);
    const std::size_t rows = count();
    const std::size_t cols = count();
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) m.at(r, c) = real();
    return m;
  }
};

std::string header_kind(Reader& r) {
  r.expect("adco-checkpoint");
  r.expect("v1");
  r.expect("kind");
  return r.token();
}

}  // namespace

void save_encoder(const MlpEncoder& encoder, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out << "adco-checkpoint v1\nkind encoder\ndims " << encoder.layer_dims().size();
  for (std::size_t d : encoder.layer_dims()) out << ' ' << d;
  out << '\n';
  for (std::size_t l = 0; l < encoder.num_layers(); ++l) {
    write_tensor(out, "W" + std::to_string(l), encoder.weights()[l]);
    write_tensor(out, "b" + std::to_string(l), encoder.biases()[l]);
  }
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

MlpEncoder load_encoder(const std::string& path) {
  Reader r(path);
  if (header_kind(r) != "encoder")
    throw ParseError("checkpoint " + path + ": not an encoder checkpoint");
  r.expect("dims");
  const std::size_t n = r.count();
  if (n < 2) throw ParseError("checkpoint " + path + ": bad dims header");
  std::vector<std::size_t> dims(n);
  for (auto& d : dims) d = r.count();
  std::vector<Matrix> weights, biases;
  for (std::size_t l = 0; l + 1 < n; ++l) {
    weights.push_back(r.tensor("W" + std::to_string(l)));
    biases.push_back(r.tensor("b" + std::to_string(l)));
  }
  return MlpEncoder::from_parameters(std::move(dims), std::move(weights), std::move(biases));
}

void save_bank(const Matrix& bank, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out << "adco-checkpoint v1\nkind bank\ndims 2 " << bank.rows() << ' ' << bank.cols()
      << '\n';
  write_tensor(out, "N", bank);
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

Matrix load_bank(const std::string& path) {
  Reader r(path);
  if (header_kind(r) != "bank")
    throw ParseError("checkpoint " + path + ": not a bank checkpoint");
  r.expect("dims");
  if (r.count() != 2) throw ParseError("checkpoint " + path + ": bad bank dims header");
  const std::size_t rows = r.count();
  const std::size_t cols = r.count();
  Matrix m = r.tensor("N");
  if (m.rows() != rows || m.cols() != cols)
    throw ParseError("checkpoint " + path + ": tensor shape does not match header");
  return m;
}

}  // namespace adco
