#include "mosbench/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "mosbench/error.hpp"
#include "mosbench/hashing.hpp"

namespace mosbench {

namespace {

constexpr char kMagic[8] = {'M', 'B', 'N', 'E', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    bytes_.append(buf, sizeof(T));
  }
  void raw(const void* data, std::size_t n) { bytes_.append(static_cast<const char*>(data), n); }
  void text(const std::string& s) {
    put<std::uint32_t>(std::uint32_t(s.size()));
    raw(s.data(), s.size());
  }
  void ints(const std::vector<int>& v) {
    put<std::uint32_t>(std::uint32_t(v.size()));
    for (int x : v) put<std::int32_t>(x);
  }
  std::string finish() {
    Fnv1a h;
    h.add(bytes_);
    put<std::uint64_t>(h.value());
    return std::move(bytes_);
  }

 private:
  std::string bytes_;
};

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)), sizeof(T));
    return value;
  }
  const char* take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw ParseError("checkpoint is truncated");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::string text() {
    const auto n = get<std::uint32_t>();
    return std::string(take(n), n);
  }
  std::vector<int> ints() {
    const auto n = get<std::uint32_t>();
    if (n > 1024) throw ParseError("checkpoint list length out of range");
    std::vector<int> v(n);
    for (auto& x : v) x = get<std::int32_t>();
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void put_arch(Writer& w, const ArchConfig& a) {
  w.ints(a.mean_channels);
  w.ints(a.bias_channels);
  for (int v : {a.convs_per_mean_block, a.convs_per_bias_block, a.recurrent_hidden,
                a.dense_hidden, a.judge_embedding_dim, a.num_judges})
    w.put<std::int32_t>(v);
  w.put<double>(a.dropout_rate);
  w.put<double>(a.norm_momentum);
}

ArchConfig get_arch(Reader& r) {
  ArchConfig a;
  a.mean_channels = r.ints();
  a.bias_channels = r.ints();
  for (int* v : {&a.convs_per_mean_block, &a.convs_per_bias_block, &a.recurrent_hidden,
                 &a.dense_hidden, &a.judge_embedding_dim, &a.num_judges})
    *v = r.get<std::int32_t>();
  a.dropout_rate = r.get<double>();
  a.norm_momentum = r.get<double>();
  return a;
}

template <typename Params, typename F>
void for_each_tensor(Params& params, F&& f) {
  for_each_parameter(params, f);
  for_each_statistic(params, f);
}

}  // namespace

template <typename Scalar>
std::string encode_checkpoint(const Checkpoint<Scalar>& checkpoint) {
  const auto& params = checkpoint.params;
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(sizeof(Scalar));
  put_arch(w, params.arch);
  w.put<std::uint8_t>(params.mean_net_active);
  w.put<std::uint8_t>(params.bias_net_active);
  w.put<std::uint32_t>(std::uint32_t(checkpoint.roster.size()));
  for (const auto& judge : checkpoint.roster) w.text(judge);
  std::uint32_t count = 0;
  for_each_tensor(params, [&](const std::string&, const auto&) { ++count; });
  w.put<std::uint32_t>(count);
  for_each_tensor(params, [&](const std::string& name, const auto& t) {
    w.text(name);
    w.put<std::uint64_t>(std::uint64_t(t.rows()));
    w.put<std::uint64_t>(std::uint64_t(t.cols()));
    w.raw(t.data(), std::size_t(t.size()) * sizeof(Scalar));
  });
  return w.finish();
}

template <typename Scalar>
Checkpoint<Scalar> decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw ParseError("not a checkpoint (bad magic)");
  const std::string_view body(bytes.data(), bytes.size() - sizeof(std::uint64_t));
  Fnv1a h;
  h.add(body);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body.size(), sizeof stored);
  if (stored != h.value()) throw ParseError("checkpoint checksum mismatch");

  Reader r(body);
  r.take(sizeof kMagic);
  if (const auto v = r.get<std::uint32_t>(); v != kVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(v));
  if (const auto width = r.get<std::uint32_t>(); width != sizeof(Scalar))
    throw ParseError("checkpoint stores " + std::to_string(width * 8) + "-bit scalars, expected " +
                     std::to_string(sizeof(Scalar) * 8));
  const ArchConfig arch = get_arch(r);
  try {
    arch.validate();
  } catch (const ValidationError& e) {
    throw ParseError(std::string("checkpoint architecture invalid: ") + e.what());
  }
  Checkpoint<Scalar> out;
  out.params = zeros_like(init_params<Scalar>(arch, 0));
  out.params.mean_net_active = r.get<std::uint8_t>() != 0;
  out.params.bias_net_active = r.get<std::uint8_t>() != 0;
  const auto judges = r.get<std::uint32_t>();
  if (judges != std::uint32_t(arch.num_judges))
    throw ParseError("checkpoint roster size differs from its architecture");
  for (std::uint32_t k = 0; k < judges; ++k) out.roster.push_back(r.text());

  std::uint32_t expected = 0;
  for_each_tensor(out.params, [&](const std::string&, const auto&) { ++expected; });
  if (r.get<std::uint32_t>() != expected) throw ParseError("checkpoint tensor count mismatch");
  for_each_tensor(out.params, [&](const std::string& name, auto& t) {
    const std::string stored_name = r.text();
    if (stored_name != name)
      throw ParseError("checkpoint tensor '" + stored_name + "' found where '" + name +
                       "' was expected");
    const auto rows = r.get<std::uint64_t>(), cols = r.get<std::uint64_t>();
    if (rows != std::uint64_t(t.rows()) || cols != std::uint64_t(t.cols()))
      throw ParseError("checkpoint tensor '" + name + "' has the wrong shape");
    std::memcpy(t.data(), r.take(std::size_t(t.size()) * sizeof(Scalar)),
                std::size_t(t.size()) * sizeof(Scalar));
  });
  if (!r.done()) throw ParseError("trailing bytes after checkpoint tensors");
  return out;
}

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<Scalar>& checkpoint) {
  const std::string bytes = encode_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint<Scalar>(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

#define MOSBENCH_INSTANTIATE(S)                                                      \
  template std::string encode_checkpoint<S>(const Checkpoint<S>&);                   \
  template Checkpoint<S> decode_checkpoint<S>(const std::string&);                   \
  template void save_checkpoint<S>(const std::filesystem::path&, const Checkpoint<S>&); \
  template Checkpoint<S> load_checkpoint<S>(const std::filesystem::path&);

MOSBENCH_INSTANTIATE(float)
MOSBENCH_INSTANTIATE(double)

#undef MOSBENCH_INSTANTIATE

}  // namespace mosbench
