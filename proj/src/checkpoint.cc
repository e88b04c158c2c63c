// melvc/checkpoint.cc
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "melvc/checkpoint.h"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace melvc {

namespace {

constexpr char kMagic[8] = {'M', 'E', 'L', 'V', 'C', 'K', 'P', '1'};

void put_u32(std::ofstream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_u64(std::ofstream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ofstream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_matrix(std::ofstream& os, const ad::Matrix& m) {
  put_u32(os, static_cast<std::uint32_t>(m.rows()));
  put_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      double v = m(r, c);
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

std::uint32_t get_u32(std::ifstream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::uint64_t get_u64(std::ifstream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::string get_string(std::ifstream& is) {
  std::uint64_t n = get_u64(is);
  if (!is || n > (1ull << 30))
    throw std::runtime_error("checkpoint: bad string length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

ad::Matrix get_matrix(std::ifstream& is) {
  std::uint32_t rows = get_u32(is), cols = get_u32(is);
  if (!is || rows > (1u << 24) || cols > (1u << 24))
    throw std::runtime_error("checkpoint: bad matrix header");
  ad::Matrix m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) {
      double v = 0;
      is.read(reinterpret_cast<char*>(&v), sizeof v);
      m(r, c) = v;
    }
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const Trainer& trainer) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("save_checkpoint: cannot open " + path.string());

  const ModelState& state = trainer.state();
  std::string config_text =
      canonical_config_text(state.cfg, trainer.config());

  os.write(kMagic, sizeof kMagic);
  put_u64(os, fnv1a64(config_text));
  put_u64(os, state.step);
  put_string(os, config_text);
  put_string(os, trainer.rng().serialize());

  auto params = state.named_params();
  put_u32(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_u64(os, p.name.size());
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_matrix(os, p.var.value());
  }

  const AdamState& opt = trainer.optimizer();
  put_u64(os, opt.t);
  put_u32(os, static_cast<std::uint32_t>(opt.m.size()));
  for (std::size_t i = 0; i < opt.m.size(); ++i) {
    put_matrix(os, opt.m[i]);
    put_matrix(os, opt.v[i]);
  }
  if (!os)
    throw std::runtime_error("save_checkpoint: write failed for " +
                             path.string());
}

Trainer load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::runtime_error("load_checkpoint: cannot open " + path.string());

  char magic[8] = {};
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("load_checkpoint: " + path.string() +
                             " is not a melvc checkpoint");

  std::uint64_t fingerprint = get_u64(is);
  std::uint64_t step = get_u64(is);
  std::string config_text = get_string(is);
  if (fnv1a64(config_text) != fingerprint)
    throw std::runtime_error(
        "load_checkpoint: config fingerprint mismatch in " + path.string() +
        " (corrupt or edited checkpoint)");
  std::string rng_state = get_string(is);

  ModelConfig model_cfg = model_config_from_text(config_text);
  TrainConfig train_cfg = train_config_from_text(config_text);
  ModelState state = init_model(model_cfg, 0);
  state.step = step;
  state.config_fingerprint = fingerprint;

  auto params = state.named_params();
  std::uint32_t n_params = get_u32(is);
  if (n_params != params.size())
    throw std::runtime_error("load_checkpoint: parameter count mismatch");
  for (auto& p : params) {
    std::uint64_t name_len = get_u64(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    if (name != p.name)
      throw std::runtime_error("load_checkpoint: expected parameter " +
                               p.name + " but found " + name);
    ad::Matrix m = get_matrix(is);
    if (m.rows() != p.var.rows() || m.cols() != p.var.cols())
      throw std::runtime_error("load_checkpoint: shape mismatch for " +
                               p.name);
    p.var.mutable_value() = m;
  }

  AdamState opt;
  opt.t = get_u64(is);
  std::uint32_t n_moments = get_u32(is);
  if (n_moments != 0 && n_moments != params.size())
    throw std::runtime_error("load_checkpoint: optimizer state mismatch");
  for (std::uint32_t i = 0; i < n_moments; ++i) {
    opt.m.push_back(get_matrix(is));
    opt.v.push_back(get_matrix(is));
  }
  if (!is)
    throw std::runtime_error("load_checkpoint: truncated file " +
                             path.string());
  return Trainer(std::move(state), train_cfg, std::move(opt), rng_state);
}

}  // namespace melvc
