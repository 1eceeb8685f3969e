#ifndef CONVNET_TENSOR_IO_HPP
#define CONVNET_TENSOR_IO_HPP

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "convnet/tensor.hpp"

namespace convnet {

// Single-tensor binary record, little-endian regardless of host:
//   magic "TNSR" | u32 rank | u32 dims[rank] | f64 payload
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

// Container holding named TNSR records plus string metadata, used for
// checkpoints, preprocessing statistics and dictionaries:
//   magic "TNSC" | u32 version | u32 n_meta | n_meta x (str key, str value)
//   | u32 n_tensors | n_tensors x (str name, TNSR record)
// Strings are u32 length + bytes. Entry order is preserved.
class TensorFile {
public:
    void put_meta(const std::string& key, const std::string& value);
    const std::string& meta(const std::string& key) const;       // throws data_error if absent
    bool has_meta(const std::string& key) const;

    void put_tensor(const std::string& name, Tensor t);
    const Tensor& tensor(const std::string& name) const;         // throws data_error if absent
    bool has_tensor(const std::string& name) const;

    const std::vector<std::pair<std::string, std::string>>& all_meta() const { return meta_; }
    const std::vector<std::pair<std::string, Tensor>>& all_tensors() const { return tensors_; }

    void save(const std::string& path) const;
    static TensorFile load(const std::string& path);

private:
    std::vector<std::pair<std::string, std::string>> meta_;
    std::vector<std::pair<std::string, Tensor>> tensors_;
};

// Doubles committed to metadata must survive a round trip bit-exactly.
std::string format_double(double v);
double parse_double(const std::string& s);

} // namespace convnet

#endif
