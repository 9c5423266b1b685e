#include "dcemap/nifti.hpp"

#include "dcemap/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace dcemap::nifti {

static_assert(std::endian::native == std::endian::little,
              "the NIfTI codec assumes a little-endian host");

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;

// Byte offsets of the NIfTI-1 header fields we touch.
enum Offset : std::size_t {
    kSizeofHdr = 0,
    kDim = 40,
    kDatatype = 70,
    kBitpix = 72,
    kPixdim = 76,
    kVoxOffsetField = 108,
    kSclSlope = 112,
    kSclInter = 116,
    kXyztUnits = 123,
    kDescrip = 148,
    kQformCode = 252,
    kSformCode = 254,
    kSrowX = 280,
    kSrowY = 296,
    kSrowZ = 312,
    kMagic = 344,
};

template <typename T>
T get(const std::vector<char>& buf, std::size_t offset) {
    T v;
    std::memcpy(&v, buf.data() + offset, sizeof(T));
    return v;
}

template <typename T>
void put(std::vector<char>& buf, std::size_t offset, T v) {
    std::memcpy(buf.data() + offset, &v, sizeof(T));
}

std::size_t bytes_per_voxel(DataType t) {
    switch (t) {
        case DataType::UInt8: return 1;
        case DataType::Int16: return 2;
        case DataType::Float32: return 4;
        case DataType::Float64: return 8;
    }
    return 0;
}

bool known_type(std::int16_t code) {
    return code == 2 || code == 4 || code == 16 || code == 64;
}

template <typename T>
void decode(const char* src, std::size_t n, double slope, double inter, std::vector<double>& out) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        T raw;
        std::memcpy(&raw, src + i * sizeof(T), sizeof(T));
        out[i] = slope * static_cast<double>(raw) + inter;
    }
}

template <typename T>
void encode_int(const std::vector<double>& values, double slope, double inter, std::vector<char>& out) {
    for (double v : values) {
        const double scaled = std::round((v - inter) / slope);
        if (!(scaled >= std::numeric_limits<T>::min() && scaled <= std::numeric_limits<T>::max())) {
            throw Error(ErrorCode::InvalidArgument, "value does not fit the integer payload");
        }
        const auto raw = static_cast<T>(scaled);
        const char* p = reinterpret_cast<const char*>(&raw);
        out.insert(out.end(), p, p + sizeof(T));
    }
}

template <typename T>
void encode_float(const std::vector<double>& values, std::vector<char>& out) {
    for (double v : values) {
        const auto raw = static_cast<T>(v);
        const char* p = reinterpret_cast<const char*>(&raw);
        out.insert(out.end(), p, p + sizeof(T));
    }
}

}  // namespace

Image read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    }
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto bad = [&](const std::string& why) {
        return Error(ErrorCode::BadVolumeFile, path.string() + ": " + why);
    };
    if (buf.size() < kHeaderSize) {
        throw bad("truncated header");
    }
    if (get<std::int32_t>(buf, kSizeofHdr) != static_cast<std::int32_t>(kHeaderSize)) {
        throw bad("not a little-endian NIfTI-1 header");
    }
    if (std::memcmp(buf.data() + kMagic, "n+1\0", 4) != 0) {
        throw bad("missing single-file magic 'n+1'");
    }

    Image img;
    const auto ndim = get<std::int16_t>(buf, kDim);
    if (ndim < 1 || ndim > 7) {
        throw bad("dim[0] out of range");
    }
    std::size_t total = 1;
    for (int k = 1; k <= ndim; ++k) {
        const auto n = get<std::int16_t>(buf, kDim + 2 * static_cast<std::size_t>(k));
        if (n < 1) {
            throw bad("non-positive dimension");
        }
        if (k > 4 && n != 1) {
            throw bad("more than four non-trivial dimensions");
        }
        if (k <= 4) {
            img.dims[static_cast<std::size_t>(k - 1)] = static_cast<std::size_t>(n);
        }
        total *= static_cast<std::size_t>(n);
    }

    const auto code = get<std::int16_t>(buf, kDatatype);
    if (!known_type(code)) {
        throw bad("unsupported datatype " + std::to_string(code));
    }
    img.stored_type = static_cast<DataType>(code);

    double pix[3];
    for (int k = 0; k < 3; ++k) {
        pix[k] = std::abs(get<float>(buf, kPixdim + 4 * static_cast<std::size_t>(k + 1)));
        if (!(pix[k] > 0.0) || !std::isfinite(pix[k])) {
            throw bad("voxel spacing must be positive");
        }
    }
    img.spacing = {pix[0], pix[1], pix[2]};
    img.time_step = get<float>(buf, kPixdim + 16);

    const double vox_offset = get<float>(buf, kVoxOffsetField);
    if (!(vox_offset >= static_cast<double>(kHeaderSize)) || vox_offset != std::floor(vox_offset)) {
        throw bad("invalid vox_offset");
    }
    const auto offset = static_cast<std::size_t>(vox_offset);
    const std::size_t payload = total * bytes_per_voxel(img.stored_type);
    if (buf.size() < offset + payload) {
        throw bad("payload shorter than header dims imply");
    }

    double slope = get<float>(buf, kSclSlope);
    double inter = get<float>(buf, kSclInter);
    if (slope == 0.0 || !std::isfinite(slope)) {
        slope = 1.0;
        inter = 0.0;
    }
    if (!std::isfinite(inter)) {
        inter = 0.0;
    }

    const char* src = buf.data() + offset;
    switch (img.stored_type) {
        case DataType::UInt8: decode<std::uint8_t>(src, total, slope, inter, img.data); break;
        case DataType::Int16: decode<std::int16_t>(src, total, slope, inter, img.data); break;
        case DataType::Float32: decode<float>(src, total, slope, inter, img.data); break;
        case DataType::Float64: decode<double>(src, total, slope, inter, img.data); break;
    }
    return img;
}

void write(const std::filesystem::path& path, const Image& img, const WriteOptions& options) {
    std::size_t total = 1;
    for (std::size_t n : img.dims) {
        if (n < 1 || n > static_cast<std::size_t>(std::numeric_limits<std::int16_t>::max())) {
            throw Error(ErrorCode::InvalidArgument, "image dimension outside the NIfTI-1 range");
        }
        total *= n;
    }
    if (img.data.size() != total) {
        throw Error(ErrorCode::InvalidArgument, "image payload does not match its dims");
    }
    const bool integer = options.type == DataType::UInt8 || options.type == DataType::Int16;
    if (integer && (!(options.slope != 0.0) || !std::isfinite(options.slope))) {
        throw Error(ErrorCode::InvalidArgument, "integer payloads need a finite nonzero slope");
    }

    std::vector<char> buf(kVoxOffset, 0);
    put<std::int32_t>(buf, kSizeofHdr, static_cast<std::int32_t>(kHeaderSize));
    const std::int16_t ndim = img.dims[3] > 1 ? 4 : 3;
    put<std::int16_t>(buf, kDim, ndim);
    for (std::size_t k = 0; k < 4; ++k) {
        put<std::int16_t>(buf, kDim + 2 * (k + 1), static_cast<std::int16_t>(img.dims[k]));
    }
    for (std::size_t k = 5; k <= 7; ++k) {
        put<std::int16_t>(buf, kDim + 2 * k, 1);
    }
    put<std::int16_t>(buf, kDatatype, static_cast<std::int16_t>(options.type));
    put<std::int16_t>(buf, kBitpix, static_cast<std::int16_t>(8 * bytes_per_voxel(options.type)));
    const float pixdim[5] = {1.0f, static_cast<float>(img.spacing.sx),
                             static_cast<float>(img.spacing.sy), static_cast<float>(img.spacing.sz),
                             static_cast<float>(img.time_step)};
    for (std::size_t k = 0; k < 5; ++k) {
        put<float>(buf, kPixdim + 4 * k, pixdim[k]);
    }
    put<float>(buf, kVoxOffsetField, static_cast<float>(kVoxOffset));
    put<float>(buf, kSclSlope, integer ? static_cast<float>(options.slope) : 0.0f);
    put<float>(buf, kSclInter, integer ? static_cast<float>(options.intercept) : 0.0f);
    buf[kXyztUnits] = 2 | 8;  // mm, seconds
    std::strncpy(buf.data() + kDescrip, options.description.c_str(), 79);
    put<std::int16_t>(buf, kQformCode, 0);
    put<std::int16_t>(buf, kSformCode, 1);
    put<float>(buf, kSrowX, pixdim[1]);
    put<float>(buf, kSrowY + 4, pixdim[2]);
    put<float>(buf, kSrowZ + 8, pixdim[3]);
    std::memcpy(buf.data() + kMagic, "n+1\0", 4);

    buf.reserve(kVoxOffset + total * bytes_per_voxel(options.type));
    // Quantize against the float32 scaling that lands in the header.
    const double slope = static_cast<float>(options.slope);
    const double inter = static_cast<float>(options.intercept);
    switch (options.type) {
        case DataType::UInt8: encode_int<std::uint8_t>(img.data, slope, inter, buf); break;
        case DataType::Int16: encode_int<std::int16_t>(img.data, slope, inter, buf); break;
        case DataType::Float32: encode_float<float>(img.data, buf); break;
        case DataType::Float64: encode_float<double>(img.data, buf); break;
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw Error(ErrorCode::IoFailure, "short write to " + path.string());
    }
}

}  // namespace dcemap::nifti
