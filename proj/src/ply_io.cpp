#include "pcq/ply_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pcq/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary PLY I/O assumes a little-endian host");

namespace pcq {

namespace {

enum class ScalarType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::size_t scalar_size(ScalarType t) {
    switch (t) {
        case ScalarType::i8:
        case ScalarType::u8:
            return 1;
        case ScalarType::i16:
        case ScalarType::u16:
            return 2;
        case ScalarType::i32:
        case ScalarType::u32:
        case ScalarType::f32:
            return 4;
        case ScalarType::f64:
            return 8;
    }
    return 0;
}

bool parse_scalar_type(const std::string& word, ScalarType& out) {
    if (word == "char" || word == "int8") out = ScalarType::i8;
    else if (word == "uchar" || word == "uint8") out = ScalarType::u8;
    else if (word == "short" || word == "int16") out = ScalarType::i16;
    else if (word == "ushort" || word == "uint16") out = ScalarType::u16;
    else if (word == "int" || word == "int32") out = ScalarType::i32;
    else if (word == "uint" || word == "uint32") out = ScalarType::u32;
    else if (word == "float" || word == "float32") out = ScalarType::f32;
    else if (word == "double" || word == "float64") out = ScalarType::f64;
    else return false;
    return true;
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::f32;
    bool is_list = false;
    ScalarType count_type = ScalarType::u8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

struct Header {
    PlyFormat format = PlyFormat::ascii;
    std::vector<Element> elements;
    std::size_t end_line = 0;  // number of header lines consumed
};

Header parse_header(std::istream& in) {
    Header header;
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    };

    if (!next_line() || line != "ply") {
        throw ParseError("missing 'ply' magic", 1);
    }

    bool have_format = false;
    bool in_header = true;
    while (in_header) {
        if (!next_line()) {
            throw ParseError("unexpected end of file inside header", line_no);
        }
        std::istringstream ls(line);
        std::string keyword;
        ls >> keyword;
        if (keyword.empty() || keyword == "comment" || keyword == "obj_info") {
            continue;
        }
        if (keyword == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt == "binary_big_endian") {
                throw UnsupportedFormat("binary_big_endian PLY is not supported");
            }
            if (fmt == "ascii") {
                header.format = PlyFormat::ascii;
            } else if (fmt == "binary_little_endian") {
                header.format = PlyFormat::binary_little_endian;
            } else {
                throw ParseError("unknown format '" + fmt + "'", line_no);
            }
            if (version != "1.0") {
                throw ParseError("unsupported PLY version '" + version + "'", line_no);
            }
            have_format = true;
        } else if (keyword == "element") {
            std::string name;
            long long count = -1;
            ls >> name >> count;
            if (name.empty() || count < 0) {
                throw ParseError("malformed element declaration", line_no);
            }
            header.elements.push_back({name, static_cast<std::size_t>(count), {}});
        } else if (keyword == "property") {
            if (header.elements.empty()) {
                throw ParseError("property before any element", line_no);
            }
            std::string first;
            ls >> first;
            Property prop;
            if (first == "list") {
                std::string count_word, item_word;
                ls >> count_word >> item_word >> prop.name;
                if (!parse_scalar_type(count_word, prop.count_type) ||
                    !parse_scalar_type(item_word, prop.type) || prop.name.empty()) {
                    throw ParseError("malformed list property", line_no);
                }
                prop.is_list = true;
            } else {
                if (!parse_scalar_type(first, prop.type)) {
                    throw ParseError("unknown property type '" + first + "'", line_no);
                }
                ls >> prop.name;
                if (prop.name.empty()) {
                    throw ParseError("property without a name", line_no);
                }
            }
            header.elements.back().properties.push_back(prop);
        } else if (keyword == "end_header") {
            in_header = false;
        } else {
            throw ParseError("unknown header keyword '" + keyword + "'", line_no);
        }
    }
    if (!have_format) {
        throw ParseError("header has no format declaration", line_no);
    }
    header.end_line = line_no;
    return header;
}

double read_binary_scalar(std::istream& in, ScalarType type) {
    std::array<unsigned char, 8> buf{};
    if (!in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(scalar_size(type)))) {
        throw ParseError("unexpected end of file in binary body");
    }
    switch (type) {
        case ScalarType::i8: return static_cast<double>(static_cast<std::int8_t>(buf[0]));
        case ScalarType::u8: return static_cast<double>(buf[0]);
        case ScalarType::i16: {
            std::int16_t v;
            std::memcpy(&v, buf.data(), 2);
            return v;
        }
        case ScalarType::u16: {
            std::uint16_t v;
            std::memcpy(&v, buf.data(), 2);
            return v;
        }
        case ScalarType::i32: {
            std::int32_t v;
            std::memcpy(&v, buf.data(), 4);
            return v;
        }
        case ScalarType::u32: {
            std::uint32_t v;
            std::memcpy(&v, buf.data(), 4);
            return v;
        }
        case ScalarType::f32: {
            float v;
            std::memcpy(&v, buf.data(), 4);
            return v;
        }
        case ScalarType::f64: {
            double v;
            std::memcpy(&v, buf.data(), 8);
            return v;
        }
    }
    return 0.0;
}

// Streams ascii values token by token so multi-line element instances parse too.
class AsciiTokens {
public:
    explicit AsciiTokens(std::istream& in) : in_(in) {}

    double next(const char* what) {
        double v;
        if (!(in_ >> v)) {
            throw ParseError(std::string("missing or malformed ") + what + " in ascii body");
        }
        return v;
    }

private:
    std::istream& in_;
};

struct VertexLayout {
    int x = -1, y = -1, z = -1;
    int nx = -1, ny = -1, nz = -1;
};

VertexLayout vertex_layout(const Element& vertex) {
    VertexLayout layout;
    for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
        const Property& p = vertex.properties[i];
        if (p.is_list) continue;
        const int idx = static_cast<int>(i);
        if (p.name == "x") layout.x = idx;
        else if (p.name == "y") layout.y = idx;
        else if (p.name == "z") layout.z = idx;
        else if (p.name == "nx") layout.nx = idx;
        else if (p.name == "ny") layout.ny = idx;
        else if (p.name == "nz") layout.nz = idx;
    }
    return layout;
}

}  // namespace

PointCloud read_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    const Header header = parse_header(in);

    const Element* vertex = nullptr;
    for (const Element& e : header.elements) {
        if (e.name == "vertex") {
            vertex = &e;
            break;
        }
    }
    if (vertex == nullptr) {
        throw ParseError("no vertex element in header", header.end_line);
    }
    const VertexLayout layout = vertex_layout(*vertex);
    if (layout.x < 0 || layout.y < 0 || layout.z < 0) {
        throw ParseError("vertex element lacks x/y/z properties", header.end_line);
    }
    const bool with_normals = layout.nx >= 0 && layout.ny >= 0 && layout.nz >= 0;
    if (vertex->count == 0) {
        throw EmptyInput("'" + path.string() + "' declares zero vertices");
    }

    PointCloud cloud;
    cloud.points.reserve(vertex->count);
    if (with_normals) cloud.normals.reserve(vertex->count);

    AsciiTokens tokens(in);
    std::vector<double> record;
    for (const Element& element : header.elements) {
        const bool is_vertex = &element == vertex;
        if (!is_vertex && header.format == PlyFormat::binary_little_endian) {
            // Skip foreign elements record by record; lists need their counts.
            for (std::size_t i = 0; i < element.count; ++i) {
                for (const Property& p : element.properties) {
                    if (p.is_list) {
                        const auto n = static_cast<std::size_t>(read_binary_scalar(in, p.count_type));
                        in.seekg(static_cast<std::streamoff>(n * scalar_size(p.type)), std::ios::cur);
                        if (!in) throw ParseError("unexpected end of file in binary body");
                    } else {
                        read_binary_scalar(in, p.type);
                    }
                }
            }
            continue;
        }
        if (!is_vertex) {
            for (std::size_t i = 0; i < element.count; ++i) {
                for (const Property& p : element.properties) {
                    if (p.is_list) {
                        const auto n = static_cast<std::size_t>(tokens.next("list count"));
                        for (std::size_t j = 0; j < n; ++j) tokens.next("list item");
                    } else {
                        tokens.next("property value");
                    }
                }
            }
            continue;
        }

        record.resize(element.properties.size());
        for (std::size_t i = 0; i < element.count; ++i) {
            for (std::size_t pi = 0; pi < element.properties.size(); ++pi) {
                const Property& p = element.properties[pi];
                if (p.is_list) {
                    if (header.format == PlyFormat::ascii) {
                        const auto n = static_cast<std::size_t>(tokens.next("list count"));
                        for (std::size_t j = 0; j < n; ++j) tokens.next("list item");
                    } else {
                        const auto n = static_cast<std::size_t>(read_binary_scalar(in, p.count_type));
                        in.seekg(static_cast<std::streamoff>(n * scalar_size(p.type)), std::ios::cur);
                        if (!in) throw ParseError("unexpected end of file in binary body");
                    }
                    record[pi] = 0.0;
                } else {
                    record[pi] = header.format == PlyFormat::ascii
                                     ? tokens.next("vertex property")
                                     : read_binary_scalar(in, p.type);
                }
            }
            cloud.points.push_back({record[static_cast<std::size_t>(layout.x)],
                                    record[static_cast<std::size_t>(layout.y)],
                                    record[static_cast<std::size_t>(layout.z)]});
            if (with_normals) {
                Vec3 n{record[static_cast<std::size_t>(layout.nx)],
                       record[static_cast<std::size_t>(layout.ny)],
                       record[static_cast<std::size_t>(layout.nz)]};
                cloud.normals.push_back(n.normalized());
            }
        }
        break;  // vertices read; trailing elements are irrelevant
    }
    return cloud;
}

namespace {

void append_double(std::string& out, double v) {
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), res.ptr);
}

void write_f32le(std::ostream& out, double v) {
    const auto f = static_cast<float>(v);
    char bytes[4];
    std::memcpy(bytes, &f, 4);
    out.write(bytes, 4);
}

}  // namespace

void write_ply(const PointCloud& cloud, const std::filesystem::path& path, PlyFormat format) {
    if (cloud.empty()) {
        throw EmptyInput("refusing to write an empty point cloud");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    const bool with_normals = cloud.has_normals();
    const char* coord_type = format == PlyFormat::ascii ? "double" : "float";

    out << "ply\n"
        << "format " << (format == PlyFormat::ascii ? "ascii" : "binary_little_endian")
        << " 1.0\n"
        << "element vertex " << cloud.size() << "\n"
        << "property " << coord_type << " x\n"
        << "property " << coord_type << " y\n"
        << "property " << coord_type << " z\n";
    if (with_normals) {
        out << "property " << coord_type << " nx\n"
            << "property " << coord_type << " ny\n"
            << "property " << coord_type << " nz\n";
    }
    out << "end_header\n";

    if (format == PlyFormat::ascii) {
        std::string line;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            line.clear();
            append_double(line, cloud.points[i].x);
            line.push_back(' ');
            append_double(line, cloud.points[i].y);
            line.push_back(' ');
            append_double(line, cloud.points[i].z);
            if (with_normals) {
                line.push_back(' ');
                append_double(line, cloud.normals[i].x);
                line.push_back(' ');
                append_double(line, cloud.normals[i].y);
                line.push_back(' ');
                append_double(line, cloud.normals[i].z);
            }
            line.push_back('\n');
            out << line;
        }
    } else {
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            write_f32le(out, cloud.points[i].x);
            write_f32le(out, cloud.points[i].y);
            write_f32le(out, cloud.points[i].z);
            if (with_normals) {
                write_f32le(out, cloud.normals[i].x);
                write_f32le(out, cloud.normals[i].y);
                write_f32le(out, cloud.normals[i].z);
            }
        }
    }
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

}  // namespace pcq
