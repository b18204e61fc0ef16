#include "cdec/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace cdec {

namespace {

constexpr std::array<char, 8> kMagic = {'C', 'D', 'E', 'C', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) {
    throw std::runtime_error("checkpoint: truncated file");
  }
  return value;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put<std::int64_t>(out, m.rows());
  put<std::int64_t>(out, m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      put<double>(out, m(i, j));
    }
  }
}

Matrix get_matrix(std::istream& in) {
  const auto rows = get<std::int64_t>(in);
  const auto cols = get<std::int64_t>(in);
  if (rows < 0 || cols < 0 || rows > (1 << 24) || cols > (1 << 24)) {
    throw std::runtime_error("checkpoint: implausible matrix shape");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = get<double>(in);
    }
  }
  return m;
}

Vector get_vector(std::istream& in) {
  Matrix m = get_matrix(in);
  if (m.cols() != 1) {
    throw std::runtime_error("checkpoint: expected a column vector");
  }
  return m.col(0);
}

void put_adam(std::ostream& out, const AdamState<double>& s) {
  put<std::int64_t>(out, s.t);
  put<double>(out, s.beta1);
  put<double>(out, s.beta2);
  put<double>(out, s.epsilon);
  put_matrix(out, s.m);
  put_matrix(out, s.v);
}

AdamState<double> get_adam(std::istream& in) {
  AdamState<double> s;
  s.t = get<std::int64_t>(in);
  s.beta1 = get<double>(in);
  s.beta2 = get<double>(in);
  s.epsilon = get<double>(in);
  s.m = get_matrix(in);
  s.v = get_matrix(in);
  return s;
}

}  // namespace

void save_checkpoint(const Model& model, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);

  const Encoder& enc = model.encoder;
  put<std::uint8_t>(out, static_cast<std::uint8_t>(enc.activation));
  put_matrix(out, enc.w1);
  put_matrix(out, enc.b1);
  put_matrix(out, enc.w2);
  put_matrix(out, enc.b2);

  const ClassifierHead& head = model.head;
  put<std::int64_t>(out, head.boundary());
  put<std::uint64_t>(out, head.relation_ids().size());
  for (RelationId r : head.relation_ids()) {
    put<std::uint32_t>(out, r);
  }
  put_matrix(out, head.weights());

  put_adam(out, model.encoder_opt.w1);
  put_adam(out, model.encoder_opt.b1);
  put_adam(out, model.encoder_opt.w2);
  put_adam(out, model.encoder_opt.b2);
  put_adam(out, model.head_opt.prev);
  put_adam(out, model.head_opt.cur);
  if (!out) {
    throw std::runtime_error("checkpoint: write failed");
  }
}

Model load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }

  Model model;
  const auto act = get<std::uint8_t>(in);
  if (act > static_cast<std::uint8_t>(Activation::Identity)) {
    throw std::runtime_error("checkpoint: unknown activation tag");
  }
  model.encoder.activation = static_cast<Activation>(act);
  model.encoder.w1 = get_matrix(in);
  model.encoder.b1 = get_vector(in);
  model.encoder.w2 = get_matrix(in);
  model.encoder.b2 = get_vector(in);

  const auto boundary = get<std::int64_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (count > (1u << 24)) {
    throw std::runtime_error("checkpoint: implausible relation count");
  }
  std::vector<RelationId> ids(count);
  for (auto& r : ids) {
    r = get<std::uint32_t>(in);
  }
  Matrix w = get_matrix(in);
  model.head = ClassifierHead(std::move(w), boundary, std::move(ids));

  model.encoder_opt.w1 = get_adam(in);
  model.encoder_opt.b1 = get_adam(in);
  model.encoder_opt.w2 = get_adam(in);
  model.encoder_opt.b2 = get_adam(in);
  model.head_opt.prev = get_adam(in);
  model.head_opt.cur = get_adam(in);
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  }
  save_checkpoint(model, out);
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("checkpoint: cannot open " + path.string());
  }
  return load_checkpoint(in);
}

}  // namespace cdec
