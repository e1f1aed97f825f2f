#include "phaseret/rawio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "raw-array files are little-endian; big-endian hosts need swaps");

namespace phaseret {

namespace {

const char* dtype_name(RawDType t) {
    switch (t) {
        case RawDType::f64: return "f64";
        case RawDType::c128: return "c128";
        case RawDType::u8: return "u8";
    }
    return "?";
}

RawDType dtype_from_name(const std::string& s) {
    if (s == "f64") return RawDType::f64;
    if (s == "c128") return RawDType::c128;
    if (s == "u8") return RawDType::u8;
    throw DataError("raw array: unknown dtype " + s);
}

void write_header_and_payload(const std::string& path, RawDType dtype, Lattice shape,
                              const void* payload, std::size_t bytes) {
    nlohmann::json header = {{"dtype", dtype_name(dtype)},
                             {"shape", {shape.n1, shape.n2}},
                             {"order", "row-major"},
                             {"byteorder", "little"}};
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << header.dump() << '\n';
    out.write(static_cast<const char*>(payload), std::streamsize(bytes));
    if (!out) throw DataError("short write: " + path);
}

}  // namespace

void write_raw_f64(const std::string& path, Lattice shape,
                   const std::vector<double>& values) {
    if (values.size() != std::size_t(shape.size()))
        throw std::invalid_argument("write_raw_f64: size mismatch");
    write_header_and_payload(path, RawDType::f64, shape, values.data(),
                             values.size() * sizeof(double));
}

void write_raw_c128(const std::string& path, const Field& field) {
    write_header_and_payload(path, RawDType::c128, field.lattice, field.v.data(),
                             field.v.size() * sizeof(cplx));
}

void write_raw_u8(const std::string& path, Lattice shape,
                  const std::vector<std::uint8_t>& values) {
    if (values.size() != std::size_t(shape.size()))
        throw std::invalid_argument("write_raw_u8: size mismatch");
    write_header_and_payload(path, RawDType::u8, shape, values.data(), values.size());
}

RawArray read_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("missing header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad raw header in " + path + ": " + e.what());
    }

    RawArray a;
    try {
        a.dtype = dtype_from_name(header.at("dtype").get<std::string>());
        const auto shape = header.at("shape");
        if (!shape.is_array() || shape.size() != 2)
            throw DataError("raw array: shape must be [n1, n2]");
        a.shape = Lattice{shape[0].get<int>(), shape[1].get<int>()};
        if (header.at("order").get<std::string>() != "row-major")
            throw DataError("raw array: only row-major order is supported");
        if (header.at("byteorder").get<std::string>() != "little")
            throw DataError("raw array: only little-endian payloads are supported");
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad raw header in " + path + ": " + e.what());
    }

    const std::size_t count = std::size_t(a.shape.size());
    const std::size_t elem = a.dtype == RawDType::f64    ? sizeof(double)
                             : a.dtype == RawDType::c128 ? sizeof(cplx)
                                                         : 1;
    std::vector<char> payload(count * elem);
    in.read(payload.data(), std::streamsize(payload.size()));
    if (std::size_t(in.gcount()) != payload.size())
        throw DataError("truncated payload: " + path);
    if (in.peek() != std::ifstream::traits_type::eof())
        throw DataError("trailing bytes after payload: " + path);

    switch (a.dtype) {
        case RawDType::f64:
            a.f64.resize(count);
            std::memcpy(a.f64.data(), payload.data(), payload.size());
            break;
        case RawDType::c128:
            a.c128.resize(count);
            std::memcpy(a.c128.data(), payload.data(), payload.size());
            break;
        case RawDType::u8:
            a.u8.assign(payload.begin(), payload.end());
            break;
    }
    return a;
}

Field as_field(const RawArray& a) {
    if (a.dtype == RawDType::c128) return Field(a.shape, a.c128);
    if (a.dtype == RawDType::f64) {
        Field f(a.shape);
        for (std::size_t i = 0; i < a.f64.size(); ++i) f.v[i] = cplx(a.f64[i], 0.0);
        return f;
    }
    throw DataError("as_field: u8 arrays hold masks, not fields");
}

std::vector<double> as_f64(const RawArray& a) {
    if (a.dtype != RawDType::f64) throw DataError("expected an f64 raw array");
    return a.f64;
}

std::vector<std::uint8_t> as_u8(const RawArray& a) {
    if (a.dtype != RawDType::u8) throw DataError("expected a u8 raw array");
    return a.u8;
}

std::pair<Lattice, std::vector<double>> read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    std::vector<double> values;
    std::string line;
    int rows = 0, cols = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int c = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError("bad CSV value '" + cell + "' in " + path);
            }
            ++c;
        }
        if (cols < 0) cols = c;
        else if (c != cols) throw DataError("ragged CSV rows in " + path);
        ++rows;
    }
    if (rows < 2 || cols < 2) throw DataError("CSV matrix too small in " + path);
    return {Lattice{rows, cols}, std::move(values)};
}

void export_image(const Field& field, const std::string& path, ImageScale scale) {
    if (!all_finite(field)) throw std::invalid_argument("export_image: non-finite field");
    std::vector<double> mag(field.size());
    for (std::size_t i = 0; i < mag.size(); ++i) {
        const double m = std::abs(field.v[i]);
        mag[i] = scale == ImageScale::log ? std::log1p(m) : m;
    }
    double lo = mag[0], hi = mag[0];
    for (double m : mag) {
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    const double span = hi - lo;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "P5\n" << field.lattice.n2 << ' ' << field.lattice.n1 << "\n65535\n";
    for (double m : mag) {
        const double unit = span > 0.0 ? (m - lo) / span : 0.0;
        const auto q = std::uint16_t(std::lround(unit * 65535.0));
        const char bytes[2] = {char(q >> 8), char(q & 0xff)};  // MSB first per PGM
        out.write(bytes, 2);
    }
    if (!out) throw DataError("short write: " + path);
}

}  // namespace phaseret
