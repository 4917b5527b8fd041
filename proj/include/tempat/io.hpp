#pragma once

#include "tempat/linalg.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace tempat::io {

namespace fs = std::filesystem;

/// Binary matrix container: 8-byte magic "TPATMAT1", uint32 dtype (1 = f64,
/// 2 = u8), uint32 rank (always 2), uint64 rows, uint64 cols, then the
/// row-major little-endian payload.
inline constexpr char kMagic[8] = {'T', 'P', 'A', 'T', 'M', 'A', 'T', '1'};
enum class DType : std::uint32_t { F64 = 1, U8 = 2 };

void write_matrix(const fs::path& path, const Matrix& m);
Matrix read_matrix(const fs::path& path);
void write_mask(const fs::path& path, const Mask& m);
Mask read_mask(const fs::path& path);

void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

/// Shortest round-trip decimal representation; locale independent.
std::string format_real(double v);

/// Minimal CSV emitter with a one-line header.
class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(const std::string& v);
  void end_row();

 private:
  std::ofstream out_;
  bool first_ = true;
};

/// Writes a matrix as CSV with the given column names (one per column).
void write_matrix_csv(const fs::path& path, const Matrix& m, const std::vector<std::string>& header);

}  // namespace tempat::io
