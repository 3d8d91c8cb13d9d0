#include "denseval/mask_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "denseval/geometry.hpp"

namespace denseval::mask_io {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& msg) { throw InputError(msg); }

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, &info);
    }
};

FilePtr open_png_for_read(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) fail("cannot open file: " + path.string());
    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
        fail("not a PNG file: " + path.string());
    std::rewind(fp.get());
    return fp;
}

}  // namespace

LabelMap load_label_map(const std::filesystem::path& path) {
    FilePtr fp = open_png_for_read(path);
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) fail("libpng initialization failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) fail("libpng initialization failed");
    if (setjmp(png_jmpbuf(r.png))) fail("PNG decode error: " + path.string());

    png_init_io(r.png, fp.get());
    png_read_info(r.png, r.info);

    const png_uint_32 width = png_get_image_width(r.png, r.info);
    const png_uint_32 height = png_get_image_height(r.png, r.info);
    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);

    if (color_type != PNG_COLOR_TYPE_GRAY) {
        const char* kind = color_type == PNG_COLOR_TYPE_PALETTE ? "paletted"
                           : color_type == PNG_COLOR_TYPE_RGB   ? "RGB"
                           : color_type == PNG_COLOR_TYPE_RGBA  ? "RGBA"
                                                                : "gray+alpha";
        fail("label map must be single-channel grayscale, got " + std::string(kind) + " PNG: " +
             path.string());
    }
    if (bit_depth != 8 && bit_depth != 16)
        fail("label map must be 8- or 16-bit, got bit depth " + std::to_string(bit_depth) + ": " +
             path.string());

    LabelMap map;
    map.width = static_cast<int>(width);
    map.height = static_cast<int>(height);
    map.values.resize(static_cast<std::size_t>(width) * height);

    const std::size_t row_bytes = png_get_rowbytes(r.png, r.info);
    std::vector<png_byte> row(row_bytes);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(r.png, row.data(), nullptr);
        std::uint32_t* dst = map.values.data() + static_cast<std::size_t>(y) * width;
        if (bit_depth == 8) {
            for (png_uint_32 x = 0; x < width; ++x) dst[x] = row[x];
        } else {
            // 16-bit PNG samples are big-endian
            for (png_uint_32 x = 0; x < width; ++x)
                dst[x] = (static_cast<std::uint32_t>(row[2 * x]) << 8) | row[2 * x + 1];
        }
    }
    png_read_end(r.png, nullptr);
    return map;
}

void write_label_map(const std::filesystem::path& path, const LabelMap& map) {
    if (map.width < 1 || map.height < 1 ||
        map.values.size() != static_cast<std::size_t>(map.width) * map.height)
        throw std::invalid_argument("write_label_map: inconsistent LabelMap");
    std::uint32_t max_id = 0;
    for (std::uint32_t v : map.values) max_id = std::max(max_id, v);
    if (max_id > 0xffffu)
        throw std::invalid_argument("write_label_map: instance id exceeds 16-bit range");
    const int bit_depth = max_id > 0xffu ? 16 : 8;

    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) fail("cannot open file for writing: " + path.string());
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!w.png) fail("libpng initialization failed");
    w.info = png_create_info_struct(w.png);
    if (!w.info) fail("libpng initialization failed");
    if (setjmp(png_jmpbuf(w.png))) fail("PNG encode error: " + path.string());

    png_init_io(w.png, fp.get());
    png_set_IHDR(w.png, w.info, map.width, map.height, bit_depth, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    std::vector<png_byte> row(static_cast<std::size_t>(map.width) * (bit_depth / 8));
    for (int y = 0; y < map.height; ++y) {
        const std::uint32_t* src = map.values.data() + static_cast<std::size_t>(y) * map.width;
        if (bit_depth == 8) {
            for (int x = 0; x < map.width; ++x) row[x] = static_cast<png_byte>(src[x]);
        } else {
            for (int x = 0; x < map.width; ++x) {
                row[2 * x] = static_cast<png_byte>(src[x] >> 8);
                row[2 * x + 1] = static_cast<png_byte>(src[x] & 0xffu);
            }
        }
        png_write_row(w.png, row.data());
    }
    png_write_end(w.png, nullptr);
}

LuminanceImage load_luminance_image(const std::filesystem::path& path) {
    FilePtr fp = open_png_for_read(path);
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) fail("libpng initialization failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) fail("libpng initialization failed");
    if (setjmp(png_jmpbuf(r.png))) fail("PNG decode error: " + path.string());

    png_init_io(r.png, fp.get());
    png_read_info(r.png, r.info);

    png_set_expand(r.png);    // palette -> RGB, gray<8 -> 8
    png_set_strip_16(r.png);  // keep high byte of 16-bit samples
    png_set_strip_alpha(r.png);
    png_read_update_info(r.png, r.info);

    const png_uint_32 width = png_get_image_width(r.png, r.info);
    const png_uint_32 height = png_get_image_height(r.png, r.info);
    const int channels = png_get_channels(r.png, r.info);
    if (channels != 1 && channels != 3)
        fail("unsupported channel layout in image: " + path.string());

    LuminanceImage img;
    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.values.resize(static_cast<std::size_t>(width) * height);

    std::vector<png_byte> row(png_get_rowbytes(r.png, r.info));
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(r.png, row.data(), nullptr);
        std::uint8_t* dst = img.values.data() + static_cast<std::size_t>(y) * width;
        if (channels == 1) {
            std::memcpy(dst, row.data(), width);
        } else {
            for (png_uint_32 x = 0; x < width; ++x) {
                const double lum = 0.299 * row[3 * x] + 0.587 * row[3 * x + 1] +
                                   0.114 * row[3 * x + 2];
                dst[x] = static_cast<std::uint8_t>(std::lround(lum));
            }
        }
    }
    png_read_end(r.png, nullptr);
    return img;
}

void write_luminance_image(const std::filesystem::path& path, const LuminanceImage& img) {
    LabelMap as_map;
    as_map.width = img.width;
    as_map.height = img.height;
    as_map.values.assign(img.values.begin(), img.values.end());
    write_label_map(path, as_map);
}

namespace {

// Iterative find with path halving.
std::int64_t uf_find(std::vector<std::int64_t>& parent, std::int64_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

void uf_union(std::vector<std::int64_t>& parent, std::int64_t a, std::int64_t b) {
    a = uf_find(parent, a);
    b = uf_find(parent, b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
}

struct Component {
    std::int64_t root = 0;
    std::int64_t pixel_count = 0;
    int y_min = 0;
    int x_min = 0;
};

}  // namespace

ExtractionResult extract_instances(const LabelMap& map) {
    const int W = map.width;
    const int H = map.height;
    const std::size_t n = static_cast<std::size_t>(W) * H;
    if (map.width < 1 || map.height < 1 || map.values.size() != n)
        throw std::invalid_argument("extract_instances: inconsistent LabelMap");

    std::vector<std::int64_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = static_cast<std::int64_t>(i);

    // Union 8-connected equal-id pixels (only look back at visited neighbors).
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const std::int64_t i = static_cast<std::int64_t>(y) * W + x;
            const std::uint32_t v = map.values[i];
            if (v == 0) continue;
            if (x > 0 && map.values[i - 1] == v) uf_union(parent, i, i - 1);
            if (y > 0) {
                const std::int64_t up = i - W;
                if (map.values[up] == v) uf_union(parent, i, up);
                if (x > 0 && map.values[up - 1] == v) uf_union(parent, i, up - 1);
                if (x < W - 1 && map.values[up + 1] == v) uf_union(parent, i, up + 1);
            }
        }
    }

    // Gather per-id components with their pixel counts and bbox corners.
    std::map<std::uint32_t, std::vector<Component>> by_id;
    std::map<std::int64_t, std::size_t> comp_of_root;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const std::int64_t i = static_cast<std::int64_t>(y) * W + x;
            const std::uint32_t v = map.values[i];
            if (v == 0) continue;
            const std::int64_t root = uf_find(parent, i);
            auto [it, fresh] = comp_of_root.try_emplace(root, 0);
            if (fresh) {
                auto& comps = by_id[v];
                it->second = comps.size();
                comps.push_back(Component{root, 0, y, x});
            }
            auto& comp = by_id[v][it->second];
            ++comp.pixel_count;
            comp.y_min = std::min(comp.y_min, y);
            comp.x_min = std::min(comp.x_min, x);
        }
    }

    ExtractionResult result;
    std::map<std::uint32_t, std::int64_t> kept_root;
    for (auto& [id, comps] : by_id) {
        const Component* best = &comps.front();
        std::int64_t dropped = 0;
        for (const Component& c : comps) {
            const bool larger = c.pixel_count > best->pixel_count;
            const bool tie_wins =
                c.pixel_count == best->pixel_count &&
                (c.y_min < best->y_min || (c.y_min == best->y_min && c.x_min < best->x_min));
            if (larger || tie_wins) best = &c;
        }
        for (const Component& c : comps)
            if (c.root != best->root) dropped += c.pixel_count;
        kept_root[id] = best->root;
        if (dropped > 0) {
            result.dropped_pixel_count += dropped;
            result.dropped_components.push_back(DroppedComponent{id, dropped});
        }
    }

    std::map<std::uint32_t, std::size_t> index_of_id;
    for (const auto& [id, root] : kept_root) {
        index_of_id[id] = result.instances.size();
        InstanceMask m;
        m.instance_id = id;
        m.bits = BitMask(W, H);
        result.instances.push_back(std::move(m));
    }
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const std::int64_t i = static_cast<std::int64_t>(y) * W + x;
            const std::uint32_t v = map.values[i];
            if (v == 0) continue;
            if (uf_find(parent, i) == kept_root[v]) result.instances[index_of_id[v]].bits.set(x, y);
        }
    }
    for (InstanceMask& m : result.instances) m.stats = compute_mask_stats(m.bits);
    return result;
}

AnnotationSet annotation_set_from_label_map(const LabelMap& map, const std::string& image_id) {
    AnnotationSet set;
    set.image_id = image_id;
    set.width = map.width;
    set.height = map.height;
    for (InstanceMask& m : extract_instances(map).instances)
        set.instances.push_back(std::move(m.bits));
    return set;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) fields.push_back(tok);
    return fields;
}

double parse_number(const std::string& tok, const std::filesystem::path& path, int lineno) {
    std::size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &consumed);
    } catch (const std::exception&) {
        fail(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
    }
    if (consumed != tok.size())
        fail(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + tok + "'");
    return v;
}

std::vector<Polygon> parse_polygon_lines(const std::filesystem::path& path, bool expect_confidence) {
    std::ifstream in(path);
    if (!in) fail("cannot open label file: " + path.string());
    std::vector<Polygon> polys;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        const std::size_t coord_fields = fields.size() - 1 - (expect_confidence ? 1 : 0);
        if (fields.size() < (expect_confidence ? 2u : 1u) || coord_fields % 2 != 0) {
            if (expect_confidence)
                fail(where + ": odd coordinate count or missing confidence");
            fail(where + ": odd coordinate count");
        }
        if (coord_fields / 2 < 3) fail(where + ": fewer than 3 vertices");

        Polygon poly;
        const double cls = parse_number(fields[0], path, lineno);
        if (cls < 0 || cls != std::floor(cls)) fail(where + ": invalid class id '" + fields[0] + "'");
        poly.class_id = static_cast<int>(cls);
        for (std::size_t i = 0; i < coord_fields; i += 2) {
            Point p;
            p.x = parse_number(fields[1 + i], path, lineno);
            p.y = parse_number(fields[2 + i], path, lineno);
            if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0)
                fail(where + ": coordinate outside [0,1]");
            poly.vertices.push_back(p);
        }
        if (expect_confidence) {
            const double s = parse_number(fields.back(), path, lineno);
            if (s < 0.0 || s > 1.0) fail(where + ": confidence outside [0,1]");
            poly.confidence = s;
        }
        polys.push_back(std::move(poly));
    }
    return polys;
}

}  // namespace

AnnotationSet load_annotation_polygons(const std::filesystem::path& path, int width, int height) {
    AnnotationSet set;
    set.image_id = path.stem().string();
    set.width = width;
    set.height = height;
    for (Polygon& p : parse_polygon_lines(path, false)) set.instances.push_back(std::move(p));
    return set;
}

PredictionSet load_prediction_polygons(const std::filesystem::path& path, int width, int height) {
    PredictionSet set;
    set.image_id = path.stem().string();
    set.width = width;
    set.height = height;
    for (Polygon& p : parse_polygon_lines(path, true)) {
        const double s = *p.confidence;
        set.items.push_back(ScoredGeometry{std::move(p), s});
    }
    return set;
}

std::string write_polygon_labels(const AnnotationSet& set) {
    std::string out;
    char buf[32];
    for (const Geometry& geom : set.instances) {
        const Polygon* poly = std::get_if<Polygon>(&geom);
        if (!poly)
            fail("cannot serialize raster geometry as polygon labels (image " + set.image_id + ")");
        out += std::to_string(poly->class_id);
        for (const Point& v : poly->vertices) {
            std::snprintf(buf, sizeof buf, " %.6f %.6f", v.x, v.y);
            out += buf;
        }
        if (poly->confidence) {
            std::snprintf(buf, sizeof buf, " %.6f", *poly->confidence);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

void write_polygon_labels_file(const std::filesystem::path& path, const AnnotationSet& set) {
    const std::string content = write_polygon_labels(set);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open file for writing: " + path.string());
    out << content;
    if (!out) fail("write failed: " + path.string());
}

namespace {

double require_number(const ordered_json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number())
        fail(where + ": missing or non-numeric '" + key + "'");
    return j[key].get<double>();
}

}  // namespace

std::vector<PredictionSet> load_prediction_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open prediction index: " + path.string());
    ordered_json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        fail("prediction index parse error in " + path.string() + ": " + e.what());
    }
    if (!root.is_object() || !root.contains("images") || !root["images"].is_array())
        fail("prediction index must be an object with an 'images' array: " + path.string());

    std::vector<PredictionSet> sets;
    for (const ordered_json& img : root["images"]) {
        const std::string where = path.string() + " image #" + std::to_string(sets.size());
        if (!img.is_object()) fail(where + ": not an object");
        if (!img.contains("image_id") || !img["image_id"].is_string())
            fail(where + ": missing string 'image_id'");
        PredictionSet set;
        set.image_id = img["image_id"].get<std::string>();
        set.width = static_cast<int>(require_number(img, "width", where));
        set.height = static_cast<int>(require_number(img, "height", where));
        if (set.width < 1 || set.height < 1) fail(where + ": non-positive dimensions");
        if (!img.contains("items") || !img["items"].is_array())
            fail(where + ": missing 'items' array");

        for (const ordered_json& item : img["items"]) {
            const std::string iw = where + " ('" + set.image_id + "') item #" +
                                   std::to_string(set.items.size());
            if (!item.is_object()) fail(iw + ": not an object");
            const double conf = require_number(item, "confidence", iw);
            if (conf < 0.0 || conf > 1.0) fail(iw + ": confidence outside [0,1]");
            const bool has_poly = item.contains("polygon");
            const bool has_rle = item.contains("rle");
            if (has_poly == has_rle) fail(iw + ": exactly one of 'polygon' or 'rle' required");
            if (has_poly) {
                const ordered_json& coords = item["polygon"];
                if (!coords.is_array() || coords.size() % 2 != 0 || coords.size() < 6)
                    fail(iw + ": 'polygon' must hold an even list of >= 6 coordinates");
                Polygon poly;
                poly.confidence = conf;
                for (std::size_t i = 0; i < coords.size(); i += 2) {
                    if (!coords[i].is_number() || !coords[i + 1].is_number())
                        fail(iw + ": non-numeric polygon coordinate");
                    Point p{coords[i].get<double>(), coords[i + 1].get<double>()};
                    if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0)
                        fail(iw + ": polygon coordinate outside [0,1]");
                    poly.vertices.push_back(p);
                }
                set.items.push_back(ScoredGeometry{std::move(poly), conf});
            } else {
                const ordered_json& runs_json = item["rle"];
                if (!runs_json.is_array()) fail(iw + ": 'rle' must be an array");
                std::vector<std::int64_t> runs;
                std::int64_t total = 0;
                for (const ordered_json& r : runs_json) {
                    if (!r.is_number_integer() || r.get<std::int64_t>() < 0)
                        fail(iw + ": RLE runs must be non-negative integers");
                    runs.push_back(r.get<std::int64_t>());
                    total += runs.back();
                }
                const std::int64_t expected =
                    static_cast<std::int64_t>(set.width) * set.height;
                if (total != expected)
                    fail(iw + ": RLE length mismatch (runs sum to " + std::to_string(total) +
                         ", lattice has " + std::to_string(expected) + " pixels)");
                set.items.push_back(ScoredGeometry{
                    geometry::rle_decode(runs, set.width, set.height), conf});
            }
        }
        sets.push_back(std::move(set));
    }
    return sets;
}

void write_prediction_index(const std::filesystem::path& path,
                            const std::vector<PredictionSet>& sets) {
    ordered_json root;
    root["images"] = ordered_json::array();
    for (const PredictionSet& set : sets) {
        ordered_json img;
        img["image_id"] = set.image_id;
        img["width"] = set.width;
        img["height"] = set.height;
        img["items"] = ordered_json::array();
        for (const ScoredGeometry& item : set.items) {
            ordered_json j;
            j["confidence"] = std::round(item.confidence * 1e4) / 1e4;
            if (const Polygon* poly = std::get_if<Polygon>(&item.geometry)) {
                ordered_json coords = ordered_json::array();
                for (const Point& v : poly->vertices) {
                    coords.push_back(std::round(v.x * 1e6) / 1e6);
                    coords.push_back(std::round(v.y * 1e6) / 1e6);
                }
                j["polygon"] = std::move(coords);
            } else {
                j["rle"] = geometry::rle_encode(std::get<BitMask>(item.geometry));
            }
            img["items"].push_back(std::move(j));
        }
        root["images"].push_back(std::move(img));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open file for writing: " + path.string());
    out << root.dump(2) << '\n';
    if (!out) fail("write failed: " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open manifest: " + path.string());
    ordered_json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        fail("manifest parse error in " + path.string() + ": " + e.what());
    }
    if (!root.is_object()) fail("manifest must be a JSON object mapping split -> entries");

    const std::filesystem::path base = path.parent_path();
    Manifest manifest;
    for (const auto& [split, entries_json] : root.items()) {
        if (!entries_json.is_array()) fail("manifest split '" + split + "' must be an array");
        std::vector<ManifestEntry> entries;
        for (const ordered_json& e : entries_json) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
                fail("manifest split '" + split +
                     "': each entry must be [image_path, label_map_path]");
            ManifestEntry entry;
            const std::string image = e[0].get<std::string>();
            const std::string label = e[1].get<std::string>();
            if (label.empty()) fail("manifest split '" + split + "': empty label-map path");
            entry.image_path = image.empty() ? std::filesystem::path{} : base / image;
            entry.label_map_path = base / label;
            entry.image_id = entry.label_map_path.stem().string();
            entries.push_back(std::move(entry));
        }
        manifest.emplace_back(split, std::move(entries));
    }
    return manifest;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    const std::filesystem::path base = path.parent_path();
    ordered_json root = ordered_json::object();
    for (const auto& [split, entries] : manifest) {
        ordered_json list = ordered_json::array();
        for (const ManifestEntry& e : entries) {
            const std::string image =
                e.image_path.empty() ? std::string{}
                                     : e.image_path.lexically_relative(base).generic_string();
            list.push_back(ordered_json::array(
                {image, e.label_map_path.lexically_relative(base).generic_string()}));
        }
        root[split] = std::move(list);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open file for writing: " + path.string());
    out << root.dump(2) << '\n';
    if (!out) fail("write failed: " + path.string());
}

DatasetStats compute_split_stats(const std::vector<LabelMap>& maps, const std::string& split) {
    if (maps.empty()) fail("split statistics undefined for empty split '" + split + "'");

    std::vector<std::int64_t> counts;
    counts.reserve(maps.size());
    for (const LabelMap& m : maps)
        counts.push_back(static_cast<std::int64_t>(extract_instances(m).instances.size()));

    DatasetStats stats;
    stats.split = split;
    stats.image_count = static_cast<std::int64_t>(maps.size());
    for (std::int64_t c : counts) stats.total_instances += c;
    stats.mean_per_image =
        static_cast<double>(stats.total_instances) / static_cast<double>(stats.image_count);

    std::vector<std::int64_t> sorted = counts;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    stats.median_per_image = n % 2 == 1
                                 ? static_cast<double>(sorted[n / 2])
                                 : (static_cast<double>(sorted[n / 2 - 1]) +
                                    static_cast<double>(sorted[n / 2])) / 2.0;
    stats.min_per_image = sorted.front();
    stats.max_per_image = sorted.back();
    stats.coverage_percent = compute_coverage(maps);
    return stats;
}

double compute_coverage(const std::vector<LabelMap>& maps) {
    if (maps.empty()) fail("coverage undefined for an empty image list");
    const int W = maps.front().width;
    const int H = maps.front().height;
    std::int64_t nonzero = 0;
    for (const LabelMap& m : maps) {
        if (m.width != W || m.height != H)
            fail("coverage requires all label maps to share one lattice");
        for (std::uint32_t v : m.values) nonzero += v != 0;
    }
    const double denom = static_cast<double>(maps.size()) * W * H;
    return 100.0 * static_cast<double>(nonzero) / denom;
}

}  // namespace denseval::mask_io
