#include "footspot/checkpoint.hpp"

#include <cstdint>
#include <fstream>

#include "footspot/errors.hpp"

namespace footspot {

namespace {

constexpr char kMagic[8] = {'F', 'S', 'P', 'T', '0', '0', '0', '1'};

void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) {
    throw FormatError("checkpoint truncated");
  }
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& meta_json,
                     const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, meta_json.size());
  out.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
  write_u64(out, tensors.size());
  for (const auto& [name, t] : tensors) {
    write_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, t.shape().size());
    for (int64_t d : t.shape()) {
      write_u64(out, static_cast<uint64_t>(d));
    }
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.values().size() * sizeof(double)));
  }
  if (!out) {
    throw IoError("failed while writing '" + path.string() + "'");
  }
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kMagic)) {
    throw FormatError("'" + path.string() + "' is not a checkpoint file");
  }
  LoadedCheckpoint ckpt;
  const uint64_t meta_len = read_u64(in);
  ckpt.meta_json.resize(meta_len);
  in.read(ckpt.meta_json.data(), static_cast<std::streamsize>(meta_len));
  const uint64_t n_tensors = read_u64(in);
  for (uint64_t i = 0; i < n_tensors; ++i) {
    const uint64_t name_len = read_u64(in);
    std::string name(name_len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(name_len));
    const uint64_t ndim = read_u64(in);
    std::vector<int64_t> shape;
    int64_t total = 1;
    for (uint64_t d = 0; d < ndim; ++d) {
      shape.push_back(static_cast<int64_t>(read_u64(in)));
      total *= shape.back();
    }
    std::vector<double> values(static_cast<size_t>(total));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) {
      throw FormatError("checkpoint truncated inside tensor '" + name + "'");
    }
    ckpt.tensors.emplace(std::move(name),
                         Tensor::from_values(std::move(shape), std::move(values)));
  }
  return ckpt;
}

}  // namespace footspot
