#include "chestnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "chestnet/errors.hpp"
#include "chestnet/image_io.hpp"
#include "chestnet/rng.hpp"

namespace chestnet {

namespace fs = std::filesystem;

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset d;
    d.class_names = class_names;
    d.samples.reserve(indices.size());
    for (auto i : indices) d.samples.push_back(samples.at(i));
    return d;
}

const std::vector<std::string>& default_thorax_vocabulary() {
    static const std::vector<std::string> names{
        "Atelectasis", "Cardiomegaly", "Effusion",     "Infiltration", "Mass",     "Nodule",   "Pneumonia",
        "Pneumothorax", "Consolidation", "Edema",      "Emphysema",    "Fibrosis", "Pleural_Thickening",
        "Hernia"};
    return names;
}

const std::vector<MotifSpec>& motif_catalog() {
    static const std::vector<MotifSpec> catalog{
        {MotifKind::disc, 7, 7, 0, "disc_small"},
        {MotifKind::disc, 13, 13, 0, "disc_large"},
        {MotifKind::bar, 13, 3, 3, "bar_short"},
        {MotifKind::bar, 4, 19, 4, "bar_long"},
        {MotifKind::ring, 11, 11, 2, "ring_small"},
        {MotifKind::ring, 17, 17, 2, "ring_large"},
        {MotifKind::checker, 8, 8, 2, "checker_fine"},
        {MotifKind::checker, 16, 16, 4, "checker_coarse"},
    };
    return catalog;
}

void SynthConfig::validate() const {
    if (num_classes == 0) throw ConfigError("synth.num_classes must be positive");
    if (num_classes > motif_catalog().size()) {
        throw ConfigError("synth.num_classes is " + std::to_string(num_classes) + " but only " +
                          std::to_string(motif_catalog().size()) + " motif kinds exist");
    }
    if (num_patients == 0 || images_per_patient == 0) {
        throw ConfigError("synth.num_patients and images_per_patient must be positive");
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        const auto& m = motif_catalog()[c];
        if (m.width > image_size || m.height > image_size) {
            throw ConfigError("synth.image_size " + std::to_string(image_size) + " cannot hold motif " + m.name);
        }
    }
    if (!label_probability.empty() && label_probability.size() != num_classes) {
        throw ConfigError("synth.label_probability needs one entry per class");
    }
    if (!(region_jitter >= 0.0 && region_jitter <= 1.0)) throw ConfigError("synth.region_jitter must lie in [0,1]");
    for (std::size_t c = 0; c < num_classes; ++c) {
        const double p = probability(c);
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("synth label probabilities must lie in [0,1]");
    }
    if (noise_level < 0.0 || motif_intensity <= 0.0 || motif_intensity > 1.0) {
        throw ConfigError("synth noise_level/motif_intensity out of range");
    }
}

double SynthConfig::probability(std::size_t c) const {
    return label_probability.empty() ? default_label_probability : label_probability.at(c);
}

namespace {

bool boxes_touch(const MotifBox& a, const MotifBox& b) {
    // One pixel of clearance between motifs.
    return a.x < b.x + b.w + 1 && b.x < a.x + a.w + 1 && a.y < b.y + b.h + 1 && b.y < a.y + a.h + 1;
}

bool motif_pixel(const MotifSpec& m, std::size_t i, std::size_t j) {
    switch (m.kind) {
        case MotifKind::bar: return true;
        case MotifKind::checker: return ((i / m.detail) + (j / m.detail)) % 2 == 0;
        case MotifKind::disc:
        case MotifKind::ring: {
            const double c = (static_cast<double>(m.width) - 1.0) / 2.0;
            const double r = static_cast<double>(m.width) / 2.0;
            const double dy = static_cast<double>(i) - c;
            const double dx = static_cast<double>(j) - c;
            const double d2 = dx * dx + dy * dy;
            if (m.kind == MotifKind::disc) return d2 <= r * r;
            const double inner = r - static_cast<double>(m.detail);
            return d2 <= r * r && d2 > inner * inner;
        }
    }
    return false;
}

float quantize(double v) {
    v = std::clamp(v, 0.0, 1.0);
    return static_cast<float>(std::lround(v * 255.0)) / 255.0f;
}

std::string patient_name(std::size_t p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "P%04zu", p);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_labels(const std::string& field) {
    std::vector<std::string> out;
    std::stringstream ss(field);
    std::string tok;
    while (std::getline(ss, tok, '|')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path, const std::string& header_key) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (first) {
            first = false;
            if (!fields.empty() && trim(fields[0]) == header_key) continue;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

// Grid cell (column, row) of a class's region: corners first, then edges.
std::pair<std::size_t, std::size_t> region_anchor(std::size_t class_id) {
    static const std::pair<std::size_t, std::size_t> cells[] = {{0, 0}, {2, 0}, {0, 2}, {2, 2},
                                                                {1, 0}, {0, 1}, {2, 1}, {1, 2}};
    return cells[class_id % 8];
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

Dataset generate_synthetic(const SynthConfig& config) {
    config.validate();
    const auto& catalog = motif_catalog();
    const std::size_t s = config.image_size;
    Dataset d;
    for (std::size_t c = 0; c < config.num_classes; ++c) d.class_names.push_back(catalog[c].name);
    d.samples.reserve(config.num_patients * config.images_per_patient);
    for (std::size_t p = 0; p < config.num_patients; ++p) {
        Rng patient_rng(mix_seed(config.seed, p, ~std::uint64_t{0}));
        // Patients differ in overall exposure, images of one patient share it.
        const double base = std::uniform_real_distribution<double>(0.05, 0.25)(patient_rng);
        for (std::size_t k = 0; k < config.images_per_patient; ++k) {
            Rng rng(mix_seed(config.seed, p, k));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            Sample smp;
            smp.patient_id = patient_name(p);
            char name[64];
            std::snprintf(name, sizeof name, "images/%s_%02zu.png", smp.patient_id.c_str(), k);
            smp.path = name;
            smp.labels.assign(config.num_classes, 0);
            for (std::size_t c = 0; c < config.num_classes; ++c) smp.labels[c] = unit(rng) < config.probability(c) ? 1 : 0;
            for (std::size_t c = 0; c < config.num_classes; ++c) {
                if (!smp.labels[c]) continue;
                const auto& m = catalog[c];
                std::size_t x_lo = 0, x_hi = s - m.width, y_lo = 0, y_hi = s - m.height;
                if (config.regional_placement) {
                    const auto [gx, gy] = region_anchor(c);
                    const auto jitter = static_cast<long>(std::lround(config.region_jitter * static_cast<double>(s)));
                    auto range = [&](std::size_t cell, std::size_t extent, std::size_t& lo, std::size_t& hi) {
                        const long centre = static_cast<long>((2 * cell + 1) * s / 6);
                        const long start = centre - static_cast<long>(extent / 2);
                        const long max_start = static_cast<long>(s - extent);
                        lo = static_cast<std::size_t>(std::clamp(start - jitter, 0L, max_start));
                        hi = static_cast<std::size_t>(std::clamp(start + jitter, 0L, max_start));
                    };
                    range(gx, m.width, x_lo, x_hi);
                    range(gy, m.height, y_lo, y_hi);
                }
                std::uniform_int_distribution<std::size_t> px(x_lo, x_hi), any_x(0, s - m.width);
                std::uniform_int_distribution<std::size_t> py(y_lo, y_hi), any_y(0, s - m.height);
                bool placed = false;
                for (std::size_t attempt = 0; attempt < config.placement_retries && !placed; ++attempt) {
                    // A region crowded by neighbours gives way to the whole
                    // image for the second half of the attempts.
                    const bool wide = 2 * attempt >= config.placement_retries;
                    const std::size_t bx = wide ? any_x(rng) : px(rng);
                    const std::size_t by = wide ? any_y(rng) : py(rng);
                    MotifBox box{c, bx, by, m.width, m.height};
                    if (std::none_of(smp.boxes.begin(), smp.boxes.end(),
                                     [&](const MotifBox& b) { return boxes_touch(b, box); })) {
                        smp.boxes.push_back(box);
                        placed = true;
                    }
                }
                if (!placed) {
                    throw DataError("could not place motif " + m.name + " without overlap in a " + std::to_string(s) +
                                    "x" + std::to_string(s) + " image after " +
                                    std::to_string(config.placement_retries) + " attempts; use a larger image_size");
                }
            }
            std::vector<double> canvas(s * s);
            std::uniform_real_distribution<double> noise(-config.noise_level, config.noise_level);
            for (auto& v : canvas) v = base + noise(rng);
            for (const auto& b : smp.boxes) {
                const auto& m = catalog[b.class_id];
                for (std::size_t i = 0; i < b.h; ++i) {
                    for (std::size_t j = 0; j < b.w; ++j) {
                        if (motif_pixel(m, i, j)) canvas[(b.y + i) * s + b.x + j] += config.motif_intensity - base;
                    }
                }
            }
            smp.image = Tensor<float>(Shape{1, s, s});
            for (std::size_t i = 0; i < canvas.size(); ++i) smp.image[i] = quantize(canvas[i]);
            d.samples.push_back(std::move(smp));
        }
    }
    return d;
}

ManifestLoad load_manifest(const fs::path& manifest, const fs::path& image_root, const ManifestOptions& options) {
    const auto rows = read_csv_rows(manifest, "path");
    ManifestLoad result;
    std::vector<std::string> vocab = options.vocabulary;
    if (vocab.empty()) {
        std::set<std::string> names;
        for (const auto& r : rows) {
            if (r.size() >= 3) {
                for (auto& l : split_labels(r[2])) names.insert(l);
            }
        }
        vocab.assign(names.begin(), names.end());
    }
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < vocab.size(); ++i) index[vocab[i]] = i;
    result.dataset.class_names = vocab;

    for (std::size_t r = 0; r < rows.size(); ++r) {
        try {
            const auto& f = rows[r];
            if (f.size() < 2 || f.size() > 3) {
                throw DataError("expected 3 columns (path,patient_id,labels), got " + std::to_string(f.size()));
            }
            Sample smp;
            smp.path = trim(f[0]);
            smp.patient_id = trim(f[1]);
            if (smp.path.empty() || smp.patient_id.empty()) throw DataError("empty path or patient_id");
            smp.labels.assign(vocab.size(), 0);
            for (const auto& name : split_labels(f.size() == 3 ? f[2] : std::string{})) {
                auto it = index.find(name);
                if (it == index.end()) throw DataError("unknown label '" + name + "'");
                smp.labels[it->second] = 1;
            }
            smp.image = resize_bilinear(to_tensor(read_png_gray8(image_root / smp.path)), options.target_size);
            result.dataset.samples.push_back(std::move(smp));
        } catch (const DataError& e) {
            const std::string msg = std::string(e.what());
            if (options.strict) {
                throw DataError(manifest.string() + " row " + std::to_string(r + 1) + ": " + msg);
            }
            result.skipped.push_back({r + 1, msg});
        }
    }
    return result;
}

void attach_boxes(Dataset& dataset, const fs::path& boxes_csv) {
    std::map<std::string, std::size_t> by_path;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) by_path[dataset.samples[i].path] = i;
    std::map<std::string, std::size_t> by_class;
    for (std::size_t c = 0; c < dataset.class_names.size(); ++c) by_class[dataset.class_names[c]] = c;
    for (auto& s : dataset.samples) s.boxes.clear();
    for (const auto& f : read_csv_rows(boxes_csv, "path")) {
        if (f.size() != 6) throw DataError(boxes_csv.string() + ": expected path,class,x,y,w,h");
        auto sit = by_path.find(trim(f[0]));
        if (sit == by_path.end()) continue;
        auto cit = by_class.find(trim(f[1]));
        if (cit == by_class.end()) throw DataError(boxes_csv.string() + ": unknown class '" + f[1] + "'");
        MotifBox b{cit->second, std::stoul(f[2]), std::stoul(f[3]), std::stoul(f[4]), std::stoul(f[5])};
        dataset.samples[sit->second].boxes.push_back(b);
    }
}

void export_dataset(const Dataset& dataset, const fs::path& dir) {
    fs::create_directories(dir / "images");
    std::ofstream manifest(dir / "manifest.csv");
    std::ofstream boxes(dir / "boxes.csv");
    if (!manifest || !boxes) throw DataError("cannot write dataset files under " + dir.string());
    manifest << "path,patient_id,labels\n";
    boxes << "path,class,x,y,w,h\n";
    for (const auto& s : dataset.samples) {
        write_png_gray8(dir / s.path, to_gray8(s.image));
        std::string labels;
        for (std::size_t c = 0; c < s.labels.size(); ++c) {
            if (!s.labels[c]) continue;
            if (!labels.empty()) labels += '|';
            labels += dataset.class_names[c];
        }
        manifest << csv_field(s.path) << ',' << csv_field(s.patient_id) << ',' << csv_field(labels) << '\n';
        for (const auto& b : s.boxes) {
            boxes << csv_field(s.path) << ',' << dataset.class_names[b.class_id] << ',' << b.x << ',' << b.y << ','
                  << b.w << ',' << b.h << '\n';
        }
    }
}

Split patient_split(const Dataset& dataset, double train_frac, double val_frac_of_train, std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0) || !(val_frac_of_train > 0.0 && val_frac_of_train < 1.0)) {
        throw ConfigError("split fractions must lie strictly between 0 and 1");
    }
    std::set<std::string> unique;
    for (const auto& s : dataset.samples) unique.insert(s.patient_id);
    std::vector<std::string> patients(unique.begin(), unique.end());
    Rng rng(mix_seed(seed, 0x5eed5));
    std::shuffle(patients.begin(), patients.end(), rng);

    // The epsilon keeps e.g. (1 - 0.8) * 10 from flooring to 1.
    constexpr double kEps = 1e-9;
    const std::size_t n = patients.size();
    const auto n_test = static_cast<std::size_t>(std::floor((1.0 - train_frac) * static_cast<double>(n) + kEps));
    const std::size_t n_train_all = n - std::min(n, n_test);
    auto n_val = static_cast<std::size_t>(std::floor(val_frac_of_train * static_cast<double>(n_train_all) + kEps));
    if (n_val == 0 && n_train_all >= 2) n_val = 1;
    const std::size_t n_train = n_train_all - std::min(n_train_all, n_val);
    if (n_test == 0 || n_val == 0 || n_train == 0) {
        throw ConfigError("patient split of " + std::to_string(n) + " patients leaves a split empty (train " +
                          std::to_string(n_train) + ", val " + std::to_string(n_val) + ", test " +
                          std::to_string(n_test) + ")");
    }
    std::map<std::string, int> where;
    for (std::size_t i = 0; i < n; ++i) where[patients[i]] = i < n_test ? 2 : (i < n_test + n_val ? 1 : 0);

    Split out;
    out.train.class_names = out.val.class_names = out.test.class_names = dataset.class_names;
    for (const auto& s : dataset.samples) {
        const int w = where.at(s.patient_id);
        (w == 0 ? out.train : (w == 1 ? out.val : out.test)).samples.push_back(s);
    }
    return out;
}

template <typename T>
Tensor<T> stack_images(const Dataset& dataset, std::span<const std::size_t> indices) {
    if (indices.empty()) throw ContractError("stack_images: empty batch");
    const Shape& s0 = dataset.samples.at(indices[0]).image.shape();
    const std::size_t per = s0.numel();
    std::vector<std::size_t> dims{indices.size()};
    dims.insert(dims.end(), s0.dims().begin(), s0.dims().end());
    Tensor<T> out{Shape(dims)};
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto& img = dataset.samples.at(indices[b]).image;
        if (img.shape() != s0) throw ShapeError("stack_images: mixed image shapes " + s0.str() + " and " + img.shape().str());
        std::copy(img.data(), img.data() + per, out.data() + b * per);
    }
    return out;
}

template <typename T>
Tensor<T> stack_labels(const Dataset& dataset, std::span<const std::size_t> indices) {
    const std::size_t c = dataset.num_classes();
    Tensor<T> out(Shape{indices.size(), c});
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto& l = dataset.samples.at(indices[b]).labels;
        if (l.size() != c) throw ShapeError("stack_labels: sample has " + std::to_string(l.size()) + " labels");
        for (std::size_t j = 0; j < c; ++j) out[b * c + j] = static_cast<T>(l[j]);
    }
    return out;
}

template Tensor<float> stack_images<float>(const Dataset&, std::span<const std::size_t>);
template Tensor<double> stack_images<double>(const Dataset&, std::span<const std::size_t>);
template Tensor<float> stack_labels<float>(const Dataset&, std::span<const std::size_t>);
template Tensor<double> stack_labels<double>(const Dataset&, std::span<const std::size_t>);

}  // namespace chestnet
