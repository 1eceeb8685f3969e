#include "convnet/tensor_io.hpp"

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "convnet/errors.hpp"

namespace convnet {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw data_error("tensor file: truncated while reading u32");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw data_error("tensor file: truncated while reading f64");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
    std::uint32_t len = read_u32(is);
    std::string s(len, '\0');
    is.read(s.data(), len);
    if (!is) throw data_error("tensor file: truncated while reading string");
    return s;
}

} // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
    os.write("TNSR", 4);
    write_u32(os, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) write_u32(os, static_cast<std::uint32_t>(d));
    const double* p = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) write_f64(os, p[i]);
}

Tensor read_tensor(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "TNSR", 4) != 0) {
        throw data_error("tensor record: bad magic, expected TNSR");
    }
    std::uint32_t rank = read_u32(is);
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        shape[i] = read_u32(is);
        n *= shape[i];
    }
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = read_f64(is);
    return Tensor(std::move(shape), std::move(data));
}

void TensorFile::put_meta(const std::string& key, const std::string& value) {
    for (auto& kv : meta_) {
        if (kv.first == key) {
            kv.second = value;
            return;
        }
    }
    meta_.emplace_back(key, value);
}

const std::string& TensorFile::meta(const std::string& key) const {
    for (const auto& kv : meta_) {
        if (kv.first == key) return kv.second;
    }
    throw data_error("tensor file: missing metadata key '" + key + "'");
}

bool TensorFile::has_meta(const std::string& key) const {
    for (const auto& kv : meta_) {
        if (kv.first == key) return true;
    }
    return false;
}

void TensorFile::put_tensor(const std::string& name, Tensor t) {
    for (auto& nt : tensors_) {
        if (nt.first == name) {
            nt.second = std::move(t);
            return;
        }
    }
    tensors_.emplace_back(name, std::move(t));
}

const Tensor& TensorFile::tensor(const std::string& name) const {
    for (const auto& nt : tensors_) {
        if (nt.first == name) return nt.second;
    }
    throw data_error("tensor file: missing tensor '" + name + "'");
}

bool TensorFile::has_tensor(const std::string& name) const {
    for (const auto& nt : tensors_) {
        if (nt.first == name) return true;
    }
    return false;
}

void TensorFile::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw data_error("cannot open for writing: " + path);
    os.write("TNSC", 4);
    write_u32(os, 1);
    write_u32(os, static_cast<std::uint32_t>(meta_.size()));
    for (const auto& kv : meta_) {
        write_string(os, kv.first);
        write_string(os, kv.second);
    }
    write_u32(os, static_cast<std::uint32_t>(tensors_.size()));
    for (const auto& nt : tensors_) {
        write_string(os, nt.first);
        write_tensor(os, nt.second);
    }
    if (!os) throw data_error("write failed: " + path);
}

TensorFile TensorFile::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "TNSC", 4) != 0) {
        throw data_error("tensor container: bad magic in " + path);
    }
    std::uint32_t version = read_u32(is);
    if (version != 1) {
        throw data_error("tensor container: unsupported version " + std::to_string(version));
    }
    TensorFile tf;
    std::uint32_t n_meta = read_u32(is);
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        std::string k = read_string(is);
        std::string v = read_string(is);
        tf.meta_.emplace_back(std::move(k), std::move(v));
    }
    std::uint32_t n_tensors = read_u32(is);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        std::string name = read_string(is);
        tf.tensors_.emplace_back(std::move(name), read_tensor(is));
    }
    return tf;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw data_error("malformed floating-point value: '" + s + "'");
    }
    return v;
}

} // namespace convnet
