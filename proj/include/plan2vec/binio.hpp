#ifndef PLAN2VEC_BINIO_HPP
#define PLAN2VEC_BINIO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace plan2vec {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are unsupported");

// All multi-byte artifacts (observations.f32, edges.bin, weights.f32, ...)
// are little-endian and written through this buffer.
class ByteWriter {
 public:
  void put_u8(uint8_t v) { buf_.push_back(v); }
  void put_u32(uint32_t v) { append(&v, 4); }
  void put_u64(uint64_t v) { append(&v, 8); }
  void put_f32(float v) { append(&v, 4); }
  void put_f32_array(const float* p, size_t n) { append(p, 4 * n); }
  const std::vector<uint8_t>& bytes() const { return buf_; }

 private:
  void append(const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}
  uint8_t get_u8() { return data_[take(1)]; }
  uint32_t get_u32() { uint32_t v; read(&v, 4); return v; }
  uint64_t get_u64() { uint64_t v; read(&v, 8); return v; }
  float get_f32() { float v; read(&v, 4); return v; }
  size_t remaining() const { return size_ - pos_; }

 private:
  size_t take(size_t n) {
    if (pos_ + n > size_) throw std::runtime_error("truncated binary file");
    size_t at = pos_;
    pos_ += n;
    return at;
  }
  void read(void* out, size_t n) {
    size_t at = take(n);
    std::memcpy(out, data_ + at, n);
  }
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

// Atomic file write: stage to <path>.tmp, then rename. Partial stages never
// leave truncated artifacts behind.
void write_file_atomic(const std::filesystem::path& path, const void* data, size_t size);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

// FNV-1a 64-bit content hash, hex-encoded; used for artifact fingerprints.
uint64_t fnv1a64(const void* data, size_t size);
std::string hash_hex(const void* data, size_t size);
std::string hash_file_hex(const std::filesystem::path& path);

}  // namespace plan2vec

#endif
