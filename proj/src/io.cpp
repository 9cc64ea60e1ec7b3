#include "eegalign/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "eegalign/error.hpp"

namespace eegalign::io {
namespace {

constexpr char kMagic[4] = {'L', 'T', 'N', 'S'};
constexpr std::uint8_t kVersion = 1;

std::size_t element_size(DType t) { return t == DType::Float32 ? 4 : 8; }

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

template <class Bits>
void store_le(Bits bits, std::uint8_t* dst) {
  for (std::size_t b = 0; b < sizeof(Bits); ++b) dst[b] = static_cast<std::uint8_t>(bits >> (8 * b));
}

template <class Bits>
Bits load_le(const std::uint8_t* src) {
  Bits v = 0;
  for (std::size_t b = sizeof(Bits); b-- > 0;) v = static_cast<Bits>((v << 8) | src[b]);
  return v;
}

void encode_payload(const Tensor& t, std::uint8_t* dst) {
  const std::size_t n = t.values.size();
  if (t.dtype == DType::Float64) {
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(dst, t.values.data(), n * 8);
    } else {
      for (std::size_t i = 0; i < n; ++i) store_le(std::bit_cast<std::uint64_t>(t.values[i]), dst + 8 * i);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      store_le(std::bit_cast<std::uint32_t>(static_cast<float>(t.values[i])), dst + 4 * i);
    }
  }
}

void decode_payload(const std::uint8_t* src, DType dtype, std::size_t n, double* dst) {
  if (dtype == DType::Float64) {
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(dst, src, n * 8);
    } else {
      for (std::size_t i = 0; i < n; ++i) dst[i] = std::bit_cast<double>(load_le<std::uint64_t>(src + 8 * i));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) dst[i] = std::bit_cast<float>(load_le<std::uint32_t>(src + 4 * i));
  }
}

[[noreturn]] void fail(TensorErrorKind kind, const std::string& origin, const std::string& msg) {
  throw TensorFormatError(kind, origin + ": " + msg);
}

// Parses and validates the fixed header plus dims from `bytes` (which must hold
// at least the header). Returns element count.
std::size_t parse_header(std::span<const std::uint8_t> bytes, const std::string& origin,
                         TensorHeader& h) {
  if (bytes.size() < kHeaderFixedBytes) fail(TensorErrorKind::Truncated, origin, "header is truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(TensorErrorKind::BadMagic, origin, "bad magic (expected LTNS)");
  if (bytes[4] != kVersion) {
    fail(TensorErrorKind::BadVersion, origin, "unsupported version " + std::to_string(bytes[4]));
  }
  if (bytes[5] != 1 && bytes[5] != 2) {
    fail(TensorErrorKind::UnknownDtype, origin, "unknown dtype code " + std::to_string(bytes[5]));
  }
  h.dtype = static_cast<DType>(bytes[5]);
  const std::size_t ndim = bytes[6];
  if (ndim == 0) fail(TensorErrorKind::BadHeader, origin, "rank must be at least 1");
  if (bytes[7] != 0) fail(TensorErrorKind::BadHeader, origin, "reserved byte must be 0");
  h.payload_offset = kHeaderFixedBytes + 8 * ndim;
  if (bytes.size() < h.payload_offset) fail(TensorErrorKind::Truncated, origin, "dimension table is truncated");
  h.dims.resize(ndim);
  std::size_t count = 1;
  for (std::size_t d = 0; d < ndim; ++d) {
    h.dims[d] = get_u64(bytes.data() + kHeaderFixedBytes + 8 * d);
    if (h.dims[d] == 0) fail(TensorErrorKind::BadHeader, origin, "dimension " + std::to_string(d) + " is zero");
    if (count > std::numeric_limits<std::size_t>::max() / 8 / h.dims[d]) {
      fail(TensorErrorKind::BadHeader, origin, "element count overflows");
    }
    count *= static_cast<std::size_t>(h.dims[d]);
  }
  return count;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

TensorHeader read_header_stream(std::ifstream& in, const std::string& origin, std::size_t& count) {
  std::vector<std::uint8_t> head(kHeaderFixedBytes);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  TensorHeader h;
  if (head.size() == kHeaderFixedBytes && head[6] > 0) {
    head.resize(kHeaderFixedBytes + 8 * head[6]);
    in.read(reinterpret_cast<char*>(head.data() + kHeaderFixedBytes),
            static_cast<std::streamsize>(head.size() - kHeaderFixedBytes));
    head.resize(kHeaderFixedBytes + static_cast<std::size_t>(in.gcount()));
  }
  count = parse_header(head, origin, h);
  return h;
}

}  // namespace

std::size_t Tensor::size() const {
  std::size_t n = 1;
  for (auto d : dims) n *= static_cast<std::size_t>(d);
  return n;
}

Tensor make_tensor(const RowMatrix& m, DType dtype) {
  Tensor t;
  t.dtype = dtype;
  t.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  t.values.assign(m.data(), m.data() + m.size());
  return t;
}

RowMatrix to_matrix(const Tensor& t) {
  if (t.dims.empty()) throw ValidationError("tensor has no dimensions");
  const auto rows = t.dims.size() == 1 ? 1 : static_cast<Eigen::Index>(t.dims[0]);
  const auto cols = static_cast<Eigen::Index>(t.size()) / rows;
  return Eigen::Map<const RowMatrix>(t.values.data(), rows, cols);
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.dims.empty() || t.dims.size() > 255) throw ValidationError("tensor rank must be in 1..255");
  for (auto d : t.dims) {
    if (d == 0) throw ValidationError("tensor dimensions must be at least 1");
  }
  if (t.values.size() != t.size()) {
    throw ValidationError("tensor holds " + std::to_string(t.values.size()) +
                          " values but its dims imply " + std::to_string(t.size()));
  }
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    if (!std::isfinite(t.values[i])) {
      throw ValidationError("tensor value at flat index " + std::to_string(i) + " is not finite");
    }
  }
  std::vector<std::uint8_t> out;
  out.reserve(kHeaderFixedBytes + 8 * t.dims.size() + element_size(t.dtype) * t.values.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(t.dtype));
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  out.push_back(0);
  for (auto d : t.dims) put_u64(out, d);
  const std::size_t header = out.size();
  out.resize(header + element_size(t.dtype) * t.values.size());
  encode_payload(t, out.data() + header);
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& origin) {
  TensorHeader h;
  const std::size_t count = parse_header(bytes, origin, h);
  const std::size_t payload = count * element_size(h.dtype);
  const std::size_t have = bytes.size() - h.payload_offset;
  if (have < payload) {
    fail(TensorErrorKind::Truncated, origin,
         "payload holds " + std::to_string(have) + " bytes, dims require " + std::to_string(payload));
  }
  if (have > payload) fail(TensorErrorKind::BadHeader, origin, "trailing bytes after payload");
  Tensor t;
  t.dims = h.dims;
  t.dtype = h.dtype;
  t.values.resize(count);
  decode_payload(bytes.data() + h.payload_offset, h.dtype, count, t.values.data());
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  const auto bytes = encode_tensor(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Tensor read_tensor(const std::filesystem::path& path) {
  auto in = open_in(path);
  const std::string origin = path.string();
  std::size_t count = 0;
  const TensorHeader h = read_header_stream(in, origin, count);
  const std::size_t payload = count * element_size(h.dtype);
  std::vector<std::uint8_t> buf(payload);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(payload));
  if (static_cast<std::size_t>(in.gcount()) != payload) {
    fail(TensorErrorKind::Truncated, origin,
         "payload holds " + std::to_string(in.gcount()) + " bytes, dims require " + std::to_string(payload));
  }
  if (in.peek() != std::ifstream::traits_type::eof()) {
    fail(TensorErrorKind::BadHeader, origin, "trailing bytes after payload");
  }
  Tensor t;
  t.dims = h.dims;
  t.dtype = h.dtype;
  t.values.resize(count);
  decode_payload(buf.data(), h.dtype, count, t.values.data());
  return t;
}

TensorHeader read_tensor_header(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::size_t count = 0;
  return read_header_stream(in, path.string(), count);
}

std::vector<double> read_tensor_row(const std::filesystem::path& path, std::size_t index) {
  auto in = open_in(path);
  const std::string origin = path.string();
  std::size_t count = 0;
  const TensorHeader h = read_header_stream(in, origin, count);
  if (index >= h.dims[0]) {
    throw ValidationError(origin + ": row " + std::to_string(index) + " out of range (" +
                          std::to_string(h.dims[0]) + " rows)");
  }
  const std::size_t row = count / static_cast<std::size_t>(h.dims[0]);
  const std::size_t esize = element_size(h.dtype);
  std::vector<std::uint8_t> buf(row * esize);
  in.seekg(static_cast<std::streamoff>(h.payload_offset + index * row * esize));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
    fail(TensorErrorKind::Truncated, origin, "payload is truncated");
  }
  std::vector<double> out(row);
  decode_payload(buf.data(), h.dtype, row, out.data());
  return out;
}

AlignmentTable parse_alignments(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t ln = 0;
  AlignmentTable table;
  bool header = false;
  while (std::getline(in, line)) {
    ++ln;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header) {
      if (line != "word,onset_s,offset_s") {
        throw ValidationError(origin + ":" + std::to_string(ln) +
                              ": expected header 'word,onset_s,offset_s'");
      }
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(ln);
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw ValidationError(where + ": expected 3 comma-separated fields");
    }
    WordAlignment a;
    a.word = line.substr(0, c1);
    auto number = [&](std::size_t from, std::size_t to, const char* field) {
      double v = 0;
      const char* b = line.data() + from;
      const char* e = line.data() + to;
      const auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || ptr != e || b == e || !std::isfinite(v)) {
        throw ValidationError(where + ": malformed " + field);
      }
      return v;
    };
    a.onset_s = number(c1 + 1, c2, "onset_s");
    a.offset_s = number(c2 + 1, line.size(), "offset_s");
    if (a.word.empty()) throw ValidationError(where + ": empty word");
    if (a.onset_s < 0.0) throw ValidationError(where + ": negative onset");
    if (!(a.onset_s < a.offset_s)) throw ValidationError(where + ": onset must precede offset");
    table.rows.push_back(std::move(a));
  }
  if (!header) throw ValidationError(origin + ": empty alignment file");
  const auto by_onset = [](const WordAlignment& a, const WordAlignment& b) { return a.onset_s < b.onset_s; };
  if (!std::is_sorted(table.rows.begin(), table.rows.end(), by_onset)) {
    std::stable_sort(table.rows.begin(), table.rows.end(), by_onset);
    table.warnings.push_back(origin + ": rows were not ordered by onset and have been sorted");
  }
  return table;
}

AlignmentTable read_alignments(const std::filesystem::path& path) {
  return parse_alignments(read_text(path), path.string());
}

void write_alignments(const std::filesystem::path& path, std::span<const WordAlignment> rows) {
  std::string out = "word,onset_s,offset_s\n";
  char buf[64];
  for (const auto& a : rows) {
    out += a.word;
    for (double v : {a.onset_s, a.offset_s}) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out += ',';
      out.append(buf, ptr);
    }
    out += '\n';
  }
  write_text(path, out);
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace eegalign::io
