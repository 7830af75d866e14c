#include "ovrun/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ovrun/errors.h"

namespace ovrun {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::string_view kMagic = "OVRUNCKP";

template <typename T>
void Put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T Get() {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw DataError("checkpoint truncated");
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void ReadInto(std::span<double> dst) {
    for (double& x : dst) x = Get<double>();
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string SerializeCheckpoint(const ModelParams& params) {
  params.Validate();
  std::string out(kMagic);
  Put<std::uint32_t>(out, kCheckpointVersion);
  Put<std::uint64_t>(out, params.dim());
  Put<std::uint64_t>(out, params.vocab_size());
  Put<std::uint64_t>(out, params.capacity);
  Put<std::uint64_t>(out, params.hops);
  Put<std::uint8_t>(out, params.mask_empty_slots ? 1 : 0);
  for (double x : params.value_embedding.values()) Put(out, x);
  for (double x : params.address_embedding.values()) Put(out, x);
  for (double x : params.out_weight) Put(out, x);
  Put(out, params.out_bias);
  return out;
}

ModelParams DeserializeCheckpoint(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("not a checkpoint (bad magic)");
  }
  Reader in(bytes.substr(kMagic.size()));
  const auto version = in.Get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " +
                    std::to_string(version));
  }
  ModelDims dims;
  dims.dim = in.Get<std::uint64_t>();
  dims.vocab_size = in.Get<std::uint64_t>();
  dims.capacity = in.Get<std::uint64_t>();
  dims.hops = in.Get<std::uint64_t>();
  dims.mask_empty_slots = in.Get<std::uint8_t>() != 0;
  if (dims.dim == 0 || dims.dim > (1u << 16) || dims.vocab_size < 2 ||
      dims.vocab_size > (1u << 24) || dims.capacity == 0 || dims.hops == 0) {
    throw DataError("checkpoint header has implausible dimensions");
  }
  ModelParams p;
  try {
    p = ModelParams::Zeros(dims);
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  in.ReadInto(p.value_embedding.values());
  in.ReadInto(p.address_embedding.values());
  in.ReadInto(p.out_weight);
  p.out_bias = in.Get<double>();
  if (!in.done()) throw DataError("trailing bytes after checkpoint payload");
  try {
    p.Validate();
  } catch (const Error& e) {
    throw DataError(std::string("invalid checkpoint: ") + e.what());
  }
  return p;
}

void SaveCheckpoint(const std::filesystem::path& path,
                    const ModelParams& params) {
  const std::string bytes = SerializeCheckpoint(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

ModelParams LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  try {
    return DeserializeCheckpoint(bytes);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace ovrun
