#include "gogan/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace gogan::train {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

constexpr char kMagic[4] = {'G', 'O', 'G', '1'};

class Writer {
 public:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  template <class T>
  void values(const std::vector<T>& v) {
    for (T x : v) {
      if constexpr (sizeof(T) == 4)
        u32(std::bit_cast<std::uint32_t>(x));
      else
        u64(std::bit_cast<std::uint64_t>(x));
    }
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}
  std::string_view take(std::size_t n) {
    if (n > data_.size() - pos_) throw IntegrityError("checkpoint truncated");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(s[i])) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    return std::string(take(n));
  }
  // Guards element counts against absurd values before allocation.
  std::uint64_t count(std::size_t elem_bytes) {
    const auto n = u64();
    if (elem_bytes > 0 && n > (data_.size() - pos_) / elem_bytes) throw IntegrityError("checkpoint truncated");
    return n;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::size_t dtype_size(DType d) { return d == DType::F32 ? 4 : 8; }

template <class T>
std::vector<T> decode(std::string_view raw) {
  std::vector<T> out(raw.size() / sizeof(T));
  Reader r(raw);
  for (auto& x : out) {
    if constexpr (sizeof(T) == 4)
      x = std::bit_cast<T>(r.u32());
    else
      x = std::bit_cast<T>(r.u64());
  }
  return out;
}

struct RawTensor {
  TensorEntry entry;
  std::string_view payload;
};

struct RawAdam {
  std::int64_t step = 0;
  ad::AdamOptions options;
  std::vector<std::pair<std::string, std::pair<std::string_view, std::string_view>>> moments;
};

struct Parsed {
  CheckpointInfo info;
  std::map<std::string, RawTensor> tensors;
  RawAdam g_adam, d_adam;
  std::uint64_t cursor = 0;
  std::vector<std::size_t> permutation;
  bool ema_started = false;
  double ema[3] = {0, 0, 0};
  std::string rng;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Parsed parse(const std::string& bytes) {
  if (bytes.size() < 4 + 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw IntegrityError("not a checkpoint (bad magic)");
  const std::string_view body(bytes.data(), bytes.size() - 8);
  Reader tail(std::string_view(bytes).substr(bytes.size() - 8));
  if (tail.u64() != fnv1a64(body)) throw IntegrityError("checkpoint checksum mismatch");

  Reader r(body);
  r.take(4);
  Parsed p;
  auto& info = p.info;
  info.version = r.u32();
  if (info.version != kCheckpointVersion)
    throw IntegrityError("unsupported checkpoint version " + std::to_string(info.version));
  info.fingerprint = r.u64();
  info.dtype = static_cast<DType>(r.u8());
  if (info.dtype != DType::F32 && info.dtype != DType::F64) throw IntegrityError("unknown dtype tag");
  info.config_text = r.str();
  if (fnv1a64(info.config_text) != info.fingerprint) throw IntegrityError("config fingerprint mismatch");

  const auto n = r.count(1);
  for (std::uint64_t i = 0; i < n; ++i) {
    RawTensor t;
    t.entry.name = r.str();
    t.entry.dtype = static_cast<DType>(r.u8());
    if (t.entry.dtype != DType::F32 && t.entry.dtype != DType::F64) throw IntegrityError("unknown dtype tag");
    const auto rank = r.u32();
    std::uint64_t count = 1;
    for (std::uint32_t a = 0; a < rank; ++a) {
      t.entry.shape.push_back(r.u64());
      count *= t.entry.shape.back();
    }
    t.payload = r.take(count * dtype_size(t.entry.dtype));
    info.tensors.push_back(t.entry);
    if (!p.tensors.emplace(t.entry.name, t).second) throw IntegrityError("duplicate tensor " + t.entry.name);
  }

  const std::size_t es = dtype_size(info.dtype);
  for (RawAdam* a : {&p.g_adam, &p.d_adam}) {
    a->step = r.i64();
    a->options.lr = r.f64();
    a->options.beta1 = r.f64();
    a->options.beta2 = r.f64();
    a->options.eps = r.f64();
    const auto m = r.count(1);
    for (std::uint64_t i = 0; i < m; ++i) {
      auto name = r.str();
      const auto len = r.count(es);
      auto mv = r.take(len * es);
      auto vv = r.take(len * es);
      a->moments.push_back({std::move(name), {mv, vv}});
    }
  }

  info.epoch = r.i64();
  p.cursor = r.u64();
  const auto perm = r.count(8);
  for (std::uint64_t i = 0; i < perm; ++i) p.permutation.push_back(r.u64());
  info.global_step = r.i64();
  info.d_updates = r.i64();
  info.g_updates = r.i64();
  p.ema_started = r.u8() != 0;
  for (double& e : p.ema) e = r.f64();
  p.rng = r.str();
  if (!r.done()) throw IntegrityError("trailing bytes in checkpoint");
  return p;
}

template <class T>
void put_tensor(Writer& w, const std::string& name, const ad::Shape& shape, const std::vector<T>& values) {
  w.str(name);
  w.u8(static_cast<std::uint8_t>(dtype_of<T>()));
  w.u32(static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) w.u64(d);
  w.values(values);
}

template <class T>
void put_network(Writer& w, const std::string& prefix, const ad::ParameterList<T>& params,
                 const net::BufferMap<T>& buffers, std::uint64_t& count) {
  for (const auto& p : params) {
    put_tensor(w, prefix + p.name, p.tensor.shape(), p.tensor.values());
    ++count;
  }
  for (const auto& [name, stats] : buffers) {
    put_tensor(w, prefix + name + ".running_mean", {stats.mean.size()}, stats.mean);
    put_tensor(w, prefix + name + ".running_var", {stats.var.size()}, stats.var);
    count += 2;
  }
}

template <class T>
void put_adam(Writer& w, const ad::AdamState<T>& a) {
  w.i64(a.step);
  w.f64(a.options.lr);
  w.f64(a.options.beta1);
  w.f64(a.options.beta2);
  w.f64(a.options.eps);
  w.u64(a.moments.size());
  for (const auto& [name, mom] : a.moments) {
    w.str(name);
    w.u64(mom.m.size());
    w.values(mom.m);
    w.values(mom.v);
  }
}

std::vector<std::uint64_t> as_u64(const ad::Shape& s) { return {s.begin(), s.end()}; }

template <class T>
void restore_network(const Parsed& p, const std::string& prefix, ad::ParameterList<T>& params,
                     net::BufferMap<T>& buffers) {
  auto fetch = [&](const std::string& name, const std::vector<std::uint64_t>& shape) {
    auto it = p.tensors.find(prefix + name);
    if (it == p.tensors.end()) throw CheckpointMismatch("checkpoint lacks tensor " + prefix + name);
    if (it->second.entry.shape != shape)
      throw CheckpointMismatch("tensor " + prefix + name + " has a different shape in the checkpoint");
    if (it->second.entry.dtype != dtype_of<T>())
      throw CheckpointMismatch("tensor " + prefix + name + " was stored at a different precision");
    return decode<T>(it->second.payload);
  };
  // Decode everything first so a mismatch leaves the network untouched.
  std::vector<std::vector<T>> values;
  for (const auto& prm : params) values.push_back(fetch(prm.name, as_u64(prm.tensor.shape())));
  std::map<std::string, ad::RunningStats<T>> stats;
  for (const auto& [name, s] : buffers) {
    stats[name].mean = fetch(name + ".running_mean", {s.mean.size()});
    stats[name].var = fetch(name + ".running_var", {s.var.size()});
  }
  std::size_t i = 0;
  for (auto& prm : params) {
    auto dst = prm.tensor.mutable_data();
    std::copy(values[i].begin(), values[i].end(), dst.begin());
    ++i;
  }
  buffers = std::move(stats);
}

template <class T>
ad::AdamState<T> restore_adam(const RawAdam& raw) {
  ad::AdamState<T> a;
  a.step = raw.step;
  a.options = raw.options;
  for (const auto& [name, mv] : raw.moments) a.moments[name] = ad::AdamMoments<T>{decode<T>(mv.first), decode<T>(mv.second)};
  return a;
}

const std::string kGen = "generator/";
const std::string kDis = "discriminator/";

}  // namespace

template <class T>
void save_checkpoint(const std::string& path, const Trainer<T>& trainer, const std::string& config_text) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(fnv1a64(config_text));
  w.u8(static_cast<std::uint8_t>(dtype_of<T>()));
  w.str(config_text);

  Writer tensors;
  std::uint64_t count = 0;
  put_network(tensors, kGen, trainer.generator().parameters(), trainer.generator().buffers(), count);
  put_network(tensors, kDis, trainer.discriminator().parameters(), trainer.discriminator().buffers(), count);
  w.u64(count);
  w.raw(tensors.bytes().data(), tensors.bytes().size());

  const auto& s = trainer.state();
  put_adam(w, s.g_adam);
  put_adam(w, s.d_adam);
  w.i64(s.epoch);
  w.u64(s.cursor);
  w.u64(s.permutation.size());
  for (auto v : s.permutation) w.u64(v);
  w.i64(s.global_step);
  w.i64(s.d_updates);
  w.i64(s.g_updates);
  w.u8(s.ema_started ? 1 : 0);
  w.f64(s.ema_d_loss);
  w.f64(s.ema_g_adv);
  w.f64(s.ema_g_l1);
  w.str(ad::serialize_rng(s.rng));
  w.u64(fnv1a64(w.bytes()));

  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
    out.flush();
    if (!out) throw std::runtime_error("short write on checkpoint " + tmp.string());
  }
  fs::rename(tmp, target);
}

template <class T>
void load_checkpoint(const std::string& path, Trainer<T>& trainer, std::optional<std::uint64_t> expected_fingerprint) {
  const std::string bytes = read_file(path);
  const Parsed p = parse(bytes);
  if (expected_fingerprint && *expected_fingerprint != p.info.fingerprint)
    throw CheckpointMismatch("checkpoint was written with a different configuration");
  if (p.info.dtype != dtype_of<T>()) throw CheckpointMismatch("checkpoint precision differs from the session precision");

  TrainState<T> s;
  s.g_adam = restore_adam<T>(p.g_adam);
  s.d_adam = restore_adam<T>(p.d_adam);
  s.epoch = static_cast<int>(p.info.epoch);
  s.cursor = p.cursor;
  s.permutation = p.permutation;
  s.global_step = p.info.global_step;
  s.d_updates = p.info.d_updates;
  s.g_updates = p.info.g_updates;
  s.ema_started = p.ema_started;
  s.ema_d_loss = p.ema[0];
  s.ema_g_adv = p.ema[1];
  s.ema_g_l1 = p.ema[2];
  s.rng = ad::deserialize_rng(p.rng);

  restore_network(p, kGen, trainer.generator().parameters(), trainer.generator().buffers());
  restore_network(p, kDis, trainer.discriminator().parameters(), trainer.discriminator().buffers());
  trainer.state() = std::move(s);
}

template <class T>
void load_generator(const std::string& path, net::Generator<T>& generator) {
  const std::string bytes = read_file(path);
  const Parsed p = parse(bytes);
  restore_network(p, kGen, generator.parameters(), generator.buffers());
}

CheckpointInfo inspect_checkpoint(const std::string& path) {
  const std::string bytes = read_file(path);
  return parse(bytes).info;
}

template void save_checkpoint<float>(const std::string&, const Trainer<float>&, const std::string&);
template void save_checkpoint<double>(const std::string&, const Trainer<double>&, const std::string&);
template void load_checkpoint<float>(const std::string&, Trainer<float>&, std::optional<std::uint64_t>);
template void load_checkpoint<double>(const std::string&, Trainer<double>&, std::optional<std::uint64_t>);
template void load_generator<float>(const std::string&, net::Generator<float>&);
template void load_generator<double>(const std::string&, net::Generator<double>&);

}  // namespace gogan::train
