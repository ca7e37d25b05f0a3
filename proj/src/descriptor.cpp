#include "shapesig/descriptor.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "shapesig/errors.hpp"

namespace shapesig {

const char* to_string(Pde pde) { return pde == Pde::Heat ? "heat" : "wave"; }

const char* to_string(Method method) {
    switch (method) {
    case Method::Full: return "full";
    case Method::Mcr: return "mcr";
    case Method::Ksmor: return "ksmor";
    case Method::Hks: return "hks";
    case Method::Wks: return "wks";
    }
    return "?";
}

Pde pde_from_string(const std::string& name) {
    if (name == "heat") return Pde::Heat;
    if (name == "wave") return Pde::Wave;
    throw UsageError("unknown pde '" + name + "' (expected heat|wave)");
}

Method method_from_string(const std::string& name) {
    if (name == "full") return Method::Full;
    if (name == "mcr") return Method::Mcr;
    if (name == "ksmor") return Method::Ksmor;
    if (name == "hks") return Method::Hks;
    if (name == "wks") return Method::Wks;
    throw UsageError("unknown method '" + name + "' (expected full|mcr|ksmor|hks|wks)");
}

Eigen::VectorXd TimeGrid::sample_times() const {
    Eigen::VectorXd t(levels);
    const double tau = dt();
    for (int k = 0; k < levels; ++k) t[k] = (k + 1) * tau;
    return t;
}

void validate(const TimeGrid& grid) {
    if (grid.levels < 1) throw DataError("time grid needs at least one level");
    if (!(grid.t_end > 0.0)) throw DataError("time grid needs a positive stopping time");
}

bool DescriptorField::compatible_with(const DescriptorField& other) const {
    if (pde != other.pde || method != other.method) return false;
    if (sample_count() != other.sample_count()) return false;
    if (energy_sigma != other.energy_sigma) return false;
    return samples == other.samples;
}

void save_descriptor_csv(const DescriptorField& field, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    for (Eigen::Index i = 0; i < field.values.rows(); ++i) {
        for (Eigen::Index k = 0; k < field.values.cols(); ++k) {
            std::fprintf(f, k == 0 ? "%.17g" : ",%.17g", field.values(i, k));
        }
        std::fputc('\n', f);
    }
    std::fclose(f);
}

namespace {

constexpr char kDescriptorMagic[8] = {'S', 'S', 'D', 'E', 'S', 'C', '0', '1'};

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void read_raw(std::istream& in, T& value, const std::string& path) {
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw DataError(path + ": truncated descriptor file");
}

} // namespace

void save_descriptor_binary(const DescriptorField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out.write(kDescriptorMagic, sizeof(kDescriptorMagic));
    write_raw(out, static_cast<std::int64_t>(field.values.rows()));
    write_raw(out, static_cast<std::int64_t>(field.values.cols()));
    write_raw(out, static_cast<std::uint8_t>(field.pde));
    write_raw(out, static_cast<std::uint8_t>(field.method));
    write_raw(out, field.t_end());
    write_raw(out, field.energy_sigma);
    out.write(reinterpret_cast<const char*>(field.samples.data()),
              static_cast<std::streamsize>(sizeof(double) * field.samples.size()));
    for (Eigen::Index i = 0; i < field.values.rows(); ++i) {
        Eigen::VectorXd row = field.values.row(i);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(sizeof(double) * row.size()));
    }
    if (!out) throw DataError("write failed for " + path);
}

DescriptorField load_descriptor_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kDescriptorMagic, sizeof(magic)) != 0)
        throw DataError(path + ": not a descriptor file");
    std::int64_t n = 0, m = 0;
    std::uint8_t pde = 0, method = 0;
    double t_end = 0.0;
    double energy_sigma = 0.0;
    read_raw(in, n, path);
    read_raw(in, m, path);
    read_raw(in, pde, path);
    read_raw(in, method, path);
    read_raw(in, t_end, path);
    read_raw(in, energy_sigma, path);
    if (n < 0 || m < 1) throw DataError(path + ": invalid descriptor dimensions");
    if (pde > 1 || method > 4) throw DataError(path + ": invalid descriptor tags");

    DescriptorField field;
    field.pde = static_cast<Pde>(pde);
    field.method = static_cast<Method>(method);
    field.energy_sigma = energy_sigma;
    field.samples.resize(m);
    in.read(reinterpret_cast<char*>(field.samples.data()),
            static_cast<std::streamsize>(sizeof(double) * m));
    if (!in) throw DataError(path + ": truncated descriptor file");
    field.values.resize(n, m);
    Eigen::VectorXd row(m);
    for (std::int64_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(double) * m));
        if (!in) throw DataError(path + ": truncated descriptor file");
        field.values.row(i) = row;
    }
    return field;
}

} // namespace shapesig
