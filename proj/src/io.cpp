#include "tempat/io.hpp"

#include "tempat/error.hpp"

#include <array>
#include <charconv>
#include <cstring>

namespace tempat::io {

namespace {

struct Header {
  DType dtype;
  std::uint64_t rows;
  std::uint64_t cols;
};

void write_header(std::ofstream& out, DType dtype, std::uint64_t rows, std::uint64_t cols) {
  out.write(kMagic, sizeof(kMagic));
  const auto code = static_cast<std::uint32_t>(dtype);
  const std::uint32_t rank = 2;
  out.write(reinterpret_cast<const char*>(&code), sizeof(code));
  out.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
}

Header read_header(std::ifstream& in, const fs::path& path) {
  char magic[8];
  std::uint32_t code = 0;
  std::uint32_t rank = 0;
  Header h{};
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&code), sizeof(code));
  in.read(reinterpret_cast<char*>(&rank), sizeof(rank));
  in.read(reinterpret_cast<char*>(&h.rows), sizeof(h.rows));
  in.read(reinterpret_cast<char*>(&h.cols), sizeof(h.cols));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0 || rank != 2) {
    throw DataError("not a matrix container: " + path.string());
  }
  h.dtype = static_cast<DType>(code);
  return h;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  return in;
}

}  // namespace

void write_matrix(const fs::path& path, const Matrix& m) {
  auto out = open_out(path);
  write_header(out, DType::F64, static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!out) throw DataError("write failed: " + path.string());
}

Matrix read_matrix(const fs::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path);
  if (h.dtype != DType::F64) throw DataError("expected f64 payload: " + path.string());
  Matrix m(static_cast<Eigen::Index>(h.rows), static_cast<Eigen::Index>(h.cols));
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw DataError("truncated matrix payload: " + path.string());
  return m;
}

void write_mask(const fs::path& path, const Mask& m) {
  auto out = open_out(path);
  write_header(out, DType::U8, static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

Mask read_mask(const fs::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path);
  if (h.dtype != DType::U8) throw DataError("expected u8 payload: " + path.string());
  Mask m(static_cast<Eigen::Index>(h.rows), static_cast<Eigen::Index>(h.cols));
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size()));
  if (!in) throw DataError("truncated mask payload: " + path.string());
  return m;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

std::string format_real(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(open_out(path)) {
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_real(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

CsvWriter& CsvWriter::cell(const std::string& v) {
  if (!first_) out_ << ',';
  out_ << v;
  first_ = false;
  return *this;
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

void write_matrix_csv(const fs::path& path, const Matrix& m, const std::vector<std::string>& header) {
  CsvWriter w(path, header);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) w.cell(m(i, j));
    w.end_row();
  }
}

}  // namespace tempat::io
