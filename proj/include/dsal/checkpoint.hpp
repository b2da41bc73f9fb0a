#pragma once

#include <cstring>
#include <fstream>
#include <string>

#include "dsal/net/params.hpp"
#include "dsal/net/spec.hpp"
#include "dsal/optim.hpp"

namespace dsal {

enum class Phase { PretrainDenoise, PretrainSod, Joint };

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::PretrainDenoise: return "pretrain_denoise";
    case Phase::PretrainSod: return "pretrain_sod";
    case Phase::Joint: return "joint";
  }
  return "?";
}

inline Phase phase_from_string(const std::string& s) {
  for (Phase p : {Phase::PretrainDenoise, Phase::PretrainSod, Phase::Joint})
    if (s == to_string(p)) return p;
  throw ValidationError(cat("unknown phase '", s, "'"));
}

template <class S>
struct NetState {
  NetworkSpec spec;
  NetworkParams<S> params;
  AdamState<S> adam;
};

// Full resumable training state: the five networks with their optimizer
// moments, the training RNG, and the config fingerprint of the run.
template <class S>
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  Phase phase = Phase::PretrainDenoise;
  std::int64_t step = 0;
  std::uint64_t config_hash = 0;
  NetState<S> g1, d1, g2, d2, g3;
  std::string rng_state;
};

namespace detail {

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), std::streamsize(n));
}
inline void read_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), std::streamsize(n));
  if (!is) throw IoError("checkpoint: truncated file");
}

template <class T>
void write_pod(std::ostream& os, T v) {
  write_bytes(os, &v, sizeof(v));
}
template <class T>
T read_pod(std::istream& is) {
  T v;
  read_bytes(is, &v, sizeof(v));
  return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_pod<std::uint64_t>(os, s.size());
  write_bytes(os, s.data(), s.size());
}
inline std::string read_string(std::istream& is) {
  const auto n = read_pod<std::uint64_t>(is);
  if (n > (1ull << 32)) throw IoError("checkpoint: implausible string length");
  std::string s(n, '\0');
  read_bytes(is, s.data(), n);
  return s;
}

template <class S>
void write_params(std::ostream& os, const NetworkParams<S>& p) {
  write_pod<std::uint32_t>(os, std::uint32_t(p.layers.size()));
  for (const auto& l : p.layers) {
    write_pod<std::uint64_t>(os, std::uint64_t(l.weight.rows()));
    write_pod<std::uint64_t>(os, std::uint64_t(l.weight.cols()));
    write_bytes(os, l.weight.data(), sizeof(S) * std::size_t(l.weight.size()));
    write_bytes(os, l.bias.data(), sizeof(S) * std::size_t(l.bias.size()));
  }
}

template <class S>
NetworkParams<S> read_params(std::istream& is) {
  NetworkParams<S> p;
  const auto n = read_pod<std::uint32_t>(is);
  p.layers.resize(n);
  for (auto& l : p.layers) {
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    if (rows > (1u << 24) || cols > (1u << 24)) throw IoError("checkpoint: implausible layer size");
    l.weight.resize(long(rows), long(cols));
    read_bytes(is, l.weight.data(), sizeof(S) * std::size_t(l.weight.size()));
    l.bias.resize(long(rows));
    read_bytes(is, l.bias.data(), sizeof(S) * std::size_t(l.bias.size()));
  }
  return p;
}

template <class S>
void write_net(std::ostream& os, const NetState<S>& net) {
  write_string(os, net.spec.name);
  const std::string spec_text = spec_to_text(net.spec);
  write_string(os, spec_text);
  write_pod<std::uint64_t>(os, fnv1a64(spec_text));
  write_params(os, net.params);
  write_params(os, net.adam.m);
  write_params(os, net.adam.v);
  write_pod<std::int64_t>(os, net.adam.t);
}

template <class S>
NetState<S> read_net(std::istream& is) {
  NetState<S> net;
  const std::string name = read_string(is);
  const std::string spec_text = read_string(is);
  const auto stored_hash = read_pod<std::uint64_t>(is);
  if (fnv1a64(spec_text) != stored_hash)
    throw IoError(cat("checkpoint: spec hash mismatch for network '", name, "'"));
  net.spec = spec_from_text(spec_text);
  net.params = read_params<S>(is);
  net.adam.m = read_params<S>(is);
  net.adam.v = read_params<S>(is);
  net.adam.t = read_pod<std::int64_t>(is);

  const auto shapes = param_shapes(net.spec);
  if (shapes.size() != net.params.layers.size())
    throw IoError(cat("checkpoint: parameter layer count does not match spec for '", name, "'"));
  for (std::size_t i = 0; i < shapes.size(); ++i)
    if (net.params.layers[i].weight.rows() != shapes[i].rows ||
        net.params.layers[i].weight.cols() != shapes[i].cols)
      throw IoError(cat("checkpoint: parameter shape mismatch at layer ", i, " of '", name, "'"));
  return net;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[8] = {'D', 'S', 'A', 'L', 'C', 'K', 'P', 'T'};

template <class S>
void save_checkpoint(const std::string& path, const Checkpoint<S>& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(cat("cannot write checkpoint '", path, "'"));
  detail::write_bytes(os, kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_pod<std::uint32_t>(os, Checkpoint<S>::kVersion);
  detail::write_pod<std::uint8_t>(os, std::uint8_t(sizeof(S)));
  detail::write_pod<std::uint64_t>(os, ckpt.config_hash);
  detail::write_string(os, to_string(ckpt.phase));
  detail::write_pod<std::int64_t>(os, ckpt.step);
  for (const auto* net : {&ckpt.g1, &ckpt.d1, &ckpt.g2, &ckpt.d2, &ckpt.g3})
    detail::write_net(os, *net);
  detail::write_string(os, ckpt.rng_state);
  if (!os) throw IoError(cat("failed while writing checkpoint '", path, "'"));
}

template <class S>
Checkpoint<S> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(cat("cannot read checkpoint '", path, "'"));
  char magic[8];
  detail::read_bytes(is, magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw IoError(cat("'", path, "' is not a checkpoint file"));
  const auto version = detail::read_pod<std::uint32_t>(is);
  if (version != Checkpoint<S>::kVersion)
    throw IoError(cat("unsupported checkpoint version ", version, " in '", path, "'"));
  const auto scalar = detail::read_pod<std::uint8_t>(is);
  if (scalar != sizeof(S))
    throw IoError(cat("checkpoint '", path, "' stores ", int(scalar),
                      "-byte scalars; this build expects ", sizeof(S)));
  Checkpoint<S> ckpt;
  ckpt.config_hash = detail::read_pod<std::uint64_t>(is);
  ckpt.phase = phase_from_string(detail::read_string(is));
  ckpt.step = detail::read_pod<std::int64_t>(is);
  for (auto* net : {&ckpt.g1, &ckpt.d1, &ckpt.g2, &ckpt.d2, &ckpt.g3})
    *net = detail::read_net<S>(is);
  ckpt.rng_state = detail::read_string(is);
  return ckpt;
}

}  // namespace dsal
