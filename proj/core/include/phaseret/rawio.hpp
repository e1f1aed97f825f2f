#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phaseret/grid.hpp"

namespace phaseret {

/// Malformed or unreadable input files (CLI exit code 2).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad flag combinations or values (CLI exit code 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RawDType { f64, c128, u8 };

/// One-line JSON header ({"byteorder":"little","dtype":...,"order":"row-major",
/// "shape":[n1,n2]}) followed by the raw little-endian payload. Round trips
/// are bit-exact.
struct RawArray {
    RawDType dtype = RawDType::f64;
    Lattice shape{16, 16};
    std::vector<double> f64;        // dtype == f64
    std::vector<cplx> c128;         // dtype == c128 (re, im doubles interleaved)
    std::vector<std::uint8_t> u8;   // dtype == u8
};

void write_raw_f64(const std::string& path, Lattice shape,
                   const std::vector<double>& values);
void write_raw_c128(const std::string& path, const Field& field);
void write_raw_u8(const std::string& path, Lattice shape,
                  const std::vector<std::uint8_t>& values);

RawArray read_raw(const std::string& path);

/// f64 promotes to a real field; c128 loads as-is; u8 is rejected.
Field as_field(const RawArray& a);
std::vector<double> as_f64(const RawArray& a);
std::vector<std::uint8_t> as_u8(const RawArray& a);

/// Plain numeric CSV (rows = lattice rows) for interoperability.
std::pair<Lattice, std::vector<double>> read_csv_matrix(const std::string& path);

enum class ImageScale { linear, log };

/// 16-bit binary PGM (P5, maxval 65535, most-significant byte first) of
/// |field|, min-max normalized; log scale maps through log(1 + |x|).
void export_image(const Field& field, const std::string& path, ImageScale scale);

}  // namespace phaseret
