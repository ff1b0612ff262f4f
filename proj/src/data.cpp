#include "pclab/data.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "pclab/chain.hpp"
#include "pclab/errors.hpp"
#include "pclab/rng.hpp"

namespace pclab {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& path, long offset,
                          const char* what) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (in.gcount() != 4) {
        std::ostringstream os;
        os << path << ": truncated while reading " << what << " at byte offset "
           << offset;
        throw ParseError(os.str());
    }
    return (static_cast<std::uint32_t>(buf[0]) << 24) |
           (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) |
           static_cast<std::uint32_t>(buf[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    const unsigned char buf[4] = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::ifstream open_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    return in;
}

}  // namespace

Batch Dataset::batch_rows(const std::vector<int>& rows) const {
    Batch b;
    b.inputs.resize(static_cast<int>(rows.size()), inputs.cols());
    b.targets.resize(static_cast<int>(rows.size()), targets.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        b.inputs.row(static_cast<int>(i)) = inputs.row(rows[i]);
        b.targets.row(static_cast<int>(i)) = targets.row(rows[i]);
    }
    return b;
}

Batch Dataset::whole() const {
    Batch b;
    b.inputs = inputs;
    b.targets = targets;
    return b;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 Split split) {
    std::ifstream img = open_binary(images_path);
    const std::uint32_t img_magic = read_u32_be(img, images_path, 0, "magic");
    if (img_magic != kImageMagic) {
        std::ostringstream os;
        os << images_path << ": bad magic 0x" << std::hex << img_magic
           << " at byte offset 0, expected 0x" << kImageMagic << " for images";
        throw ParseError(os.str());
    }
    const std::uint32_t count = read_u32_be(img, images_path, 4, "image count");
    const std::uint32_t rows = read_u32_be(img, images_path, 8, "row count");
    const std::uint32_t cols = read_u32_be(img, images_path, 12, "column count");
    const long pixels_per_image = static_cast<long>(rows) * cols;

    std::vector<unsigned char> pixels(static_cast<std::size_t>(count) *
                                      static_cast<std::size_t>(pixels_per_image));
    img.read(reinterpret_cast<char*>(pixels.data()),
             static_cast<std::streamsize>(pixels.size()));
    if (img.gcount() != static_cast<std::streamsize>(pixels.size())) {
        std::ostringstream os;
        os << images_path << ": truncated pixel data at byte offset "
           << 16 + img.gcount() << " (expected " << pixels.size() << " bytes)";
        throw ParseError(os.str());
    }

    std::ifstream lab = open_binary(labels_path);
    const std::uint32_t lab_magic = read_u32_be(lab, labels_path, 0, "magic");
    if (lab_magic != kLabelMagic) {
        std::ostringstream os;
        os << labels_path << ": bad magic 0x" << std::hex << lab_magic
           << " at byte offset 0, expected 0x" << kLabelMagic << " for labels";
        throw ParseError(os.str());
    }
    const std::uint32_t lab_count = read_u32_be(lab, labels_path, 4, "label count");
    if (lab_count != count) {
        std::ostringstream os;
        os << labels_path << ": label count " << lab_count
           << " does not match image count " << count << " from " << images_path;
        throw ParseError(os.str());
    }
    std::vector<unsigned char> raw_labels(count);
    lab.read(reinterpret_cast<char*>(raw_labels.data()), count);
    if (lab.gcount() != static_cast<std::streamsize>(count)) {
        std::ostringstream os;
        os << labels_path << ": truncated label data at byte offset "
           << 8 + lab.gcount();
        throw ParseError(os.str());
    }

    Dataset ds;
    ds.split = split;
    ds.inputs.resize(static_cast<int>(count), static_cast<int>(pixels_per_image));
    ds.targets = Mat::Zero(static_cast<int>(count), 10);
    ds.labels.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const unsigned char label = raw_labels[i];
        if (label > 9) {
            std::ostringstream os;
            os << labels_path << ": label " << static_cast<int>(label)
               << " out of range [0,10) at byte offset " << 8 + i;
            throw ParseError(os.str());
        }
        ds.labels[i] = label;
        ds.targets(static_cast<int>(i), label) = 1.0;
        const std::size_t base = static_cast<std::size_t>(i) *
                                 static_cast<std::size_t>(pixels_per_image);
        for (long p = 0; p < pixels_per_image; ++p)
            ds.inputs(static_cast<int>(i), static_cast<int>(p)) =
                static_cast<double>(pixels[base + static_cast<std::size_t>(p)]) / 255.0;
    }
    return ds;
}

void write_idx_images(const std::string& path, const std::vector<std::uint8_t>& images,
                      int count, int rows, int cols) {
    if (static_cast<long>(images.size()) != static_cast<long>(count) * rows * cols)
        throw ParseError(path + ": pixel buffer size does not match count*rows*cols");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path + ": cannot open for writing");
    write_u32_be(out, kImageMagic);
    write_u32_be(out, static_cast<std::uint32_t>(count));
    write_u32_be(out, static_cast<std::uint32_t>(rows));
    write_u32_be(out, static_cast<std::uint32_t>(cols));
    out.write(reinterpret_cast<const char*>(images.data()),
              static_cast<std::streamsize>(images.size()));
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(path + ": cannot open for writing");
    write_u32_be(out, kLabelMagic);
    write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

std::pair<Dataset, Dataset> split_validation(const Dataset& full, int validation_count) {
    if (validation_count < 0 || validation_count >= full.size())
        throw ParseError("validation count must lie in [0, dataset size)");
    const int n_train = full.size() - validation_count;

    Dataset train, val;
    train.split = Split::Train;
    val.split = Split::Validation;
    train.inputs = full.inputs.topRows(n_train);
    train.targets = full.targets.topRows(n_train);
    val.inputs = full.inputs.bottomRows(validation_count);
    val.targets = full.targets.bottomRows(validation_count);
    if (full.classification()) {
        train.labels.assign(full.labels.begin(), full.labels.begin() + n_train);
        val.labels.assign(full.labels.begin() + n_train, full.labels.end());
    }
    return {std::move(train), std::move(val)};
}

Dataset synthetic_from_teacher(const ChainSpec& teacher_spec,
                               const Parameters& teacher_params,
                               std::uint64_t seed, int n, Task task) {
    if (n < 1) throw ParseError("synthetic dataset needs n >= 1");
    teacher_params.validate_against(teacher_spec);

    Rng rng(seed);
    const int d_in = teacher_spec.input_dim();
    const int d_out = teacher_spec.output_dim();

    Dataset ds;
    ds.inputs.resize(n, d_in);
    ds.targets.resize(n, d_out);
    if (task == Task::Classification) {
        ds.targets.setZero();
        ds.labels.resize(static_cast<std::size_t>(n));
    }

    for (int i = 0; i < n; ++i) {
        Vec x(d_in);
        for (int j = 0; j < d_in; ++j) x[j] = rng.uniform();
        ds.inputs.row(i) = x.transpose();

        Vec out = x;
        for (int l = 0; l < teacher_spec.depth(); ++l)
            out = layer_apply(teacher_spec, teacher_params, l, out);

        if (task == Task::Regression) {
            ds.targets.row(i) = out.transpose();
        } else {
            int best = 0;
            out.maxCoeff(&best);
            ds.labels[static_cast<std::size_t>(i)] = best;
            ds.targets(i, best) = 1.0;
        }
    }
    return ds;
}

Dataset synthetic_dataset(std::uint64_t teacher_seed, std::uint64_t sample_seed,
                          int n, int d_in, int d_out, Task task) {
    // Hidden teacher: two tanh layers into a linear readout.
    ChainSpec teacher;
    teacher.layer_dims = {d_in, 16, 16, d_out};
    teacher.activations = {Activation::Tanh, Activation::Tanh, Activation::Identity};
    teacher.loss = LossKind::SquaredEuclidean;
    teacher.has_bias = true;
    Parameters tp = init_parameters(teacher, teacher_seed ^ 0x7eac4e5eedULL);
    return synthetic_from_teacher(teacher, tp, sample_seed, n, task);
}

}  // namespace pclab
