#include "daept/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "daept/error.hpp"

namespace daept {

namespace {

void write_values(std::ostream& out, const char* tag, const Matrix& m) {
  out << tag;
  for (double v : m.values()) out << ' ' << format_real(v);
  out << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(const char* expecting) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return std::istringstream(line);
    }
    fail(std::string("unexpected end of file, expecting ") + expecting);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("DAEPT line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

double parse_real(const std::string& tok, const LineReader& reader) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    reader.fail("malformed number '" + tok + "'");
  }
  return v;
}

Matrix read_values(LineReader& reader, const char* tag, std::size_t rows, std::size_t cols) {
  auto line = reader.next(tag);
  std::string word;
  line >> word;
  if (word != tag) reader.fail(std::string("expected '") + tag + "', found '" + word + "'");
  std::vector<double> values;
  values.reserve(rows * cols);
  std::string tok;
  while (line >> tok) values.push_back(parse_real(tok, reader));
  if (values.size() != rows * cols) {
    reader.fail(std::string(tag) + ": expected " + std::to_string(rows * cols) +
                " values, found " + std::to_string(values.size()));
  }
  return Matrix(rows, cols, std::move(values));
}

bool read_flag(std::istringstream& line, const LineReader& reader) {
  int flag = -1;
  if (!(line >> flag) || (flag != 0 && flag != 1)) reader.fail("bad trainable flag");
  return flag == 1;
}

}  // namespace

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_network(std::ostream& out, const Network& net, const Metadata& meta) {
  out << "DAEPT v1\n";
  for (const auto& [k, v] : meta) out << "meta " << k << ' ' << v << '\n';
  out << "network " << net.input_dim() << ' ' << net.layers().size() << '\n';
  for (const Layer& layer : net.layers()) {
    const int trainable = layer.trainable ? 1 : 0;
    if (const auto* d = std::get_if<Dense>(&layer.kind)) {
      out << "dense " << d->weights.rows() << ' ' << d->weights.cols() << ' '
          << to_string(d->activation) << ' ' << trainable << '\n';
      write_values(out, "W", d->weights);
      write_values(out, "b", d->bias);
    } else if (const auto* dr = std::get_if<Dropout>(&layer.kind)) {
      out << "dropout " << format_real(dr->rate) << ' ' << trainable << '\n';
    } else if (const auto* bn = std::get_if<BatchNorm>(&layer.kind)) {
      out << "batchnorm " << bn->gamma.cols() << ' ' << format_real(bn->epsilon) << ' '
          << format_real(bn->momentum) << ' ' << trainable << '\n';
      write_values(out, "gamma", bn->gamma);
      write_values(out, "beta", bn->beta);
      write_values(out, "running_mean", bn->running_mean);
      write_values(out, "running_var", bn->running_var);
    }
  }
  out << "end\n";
}

NetworkFile read_network(std::istream& in) {
  LineReader reader(in);
  NetworkFile file;

  {
    auto line = reader.next("header");
    std::string magic, version;
    line >> magic >> version;
    if (magic != "DAEPT" || version != "v1") reader.fail("not a DAEPT v1 file");
  }

  std::size_t input_dim = 0;
  std::size_t layer_count = 0;
  for (;;) {
    auto line = reader.next("network");
    std::string word;
    line >> word;
    if (word == "meta") {
      std::string key, value;
      line >> key;
      std::getline(line >> std::ws, value);
      file.meta[key] = value;
      continue;
    }
    if (word != "network" || !(line >> input_dim >> layer_count)) {
      reader.fail("expected 'network <input_dim> <layers>'");
    }
    break;
  }

  std::vector<Layer> layers;
  for (std::size_t i = 0; i < layer_count; ++i) {
    auto line = reader.next("layer");
    std::string kind;
    line >> kind;
    if (kind == "dense") {
      std::size_t rows = 0, cols = 0;
      std::string act;
      if (!(line >> rows >> cols >> act)) reader.fail("bad dense header");
      const bool trainable = read_flag(line, reader);
      Matrix w = read_values(reader, "W", rows, cols);
      Matrix b = read_values(reader, "b", 1, cols);
      Layer l = make_dense(std::move(w), std::move(b), parse_activation(act));
      l.trainable = trainable;
      layers.push_back(std::move(l));
    } else if (kind == "dropout") {
      std::string rate;
      if (!(line >> rate)) reader.fail("bad dropout header");
      Layer l = make_dropout(parse_real(rate, reader));
      l.trainable = read_flag(line, reader);
      layers.push_back(std::move(l));
    } else if (kind == "batchnorm") {
      std::size_t features = 0;
      std::string eps, momentum;
      if (!(line >> features >> eps >> momentum)) reader.fail("bad batchnorm header");
      const bool trainable = read_flag(line, reader);
      BatchNorm bn;
      bn.epsilon = parse_real(eps, reader);
      bn.momentum = parse_real(momentum, reader);
      bn.gamma = read_values(reader, "gamma", 1, features);
      bn.beta = read_values(reader, "beta", 1, features);
      bn.running_mean = read_values(reader, "running_mean", 1, features);
      bn.running_var = read_values(reader, "running_var", 1, features);
      for (double v : bn.running_var.values()) {
        if (v < 0.0) reader.fail("negative running variance");
      }
      layers.push_back(Layer{std::move(bn), trainable});
    } else {
      reader.fail("unknown layer kind '" + kind + "'");
    }
  }
  {
    auto line = reader.next("end");
    std::string word;
    line >> word;
    if (word != "end") reader.fail("expected 'end'");
  }
  file.network = Network(input_dim, std::move(layers));
  return file;
}

void save_network(const std::filesystem::path& path, const Network& net, const Metadata& meta) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_network(out, net, meta);
  if (!out) throw DataError("write failed for " + path.string());
}

NetworkFile load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return read_network(in);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace daept
