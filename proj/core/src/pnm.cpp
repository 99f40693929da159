#include "fundus/pnm.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>
#include <string>

namespace fundus {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

int parse_dim(const std::filesystem::path& path, const std::string& tok,
              const char* name) {
    if (tok.empty()) fail(path, std::string("malformed header: missing ") + name);
    for (char c : tok) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            fail(path, std::string("malformed header: bad ") + name + " '" + tok + "'");
        }
    }
    long v = 0;
    try {
        v = std::stol(tok);
    } catch (const std::exception&) {
        fail(path, std::string("malformed header: bad ") + name + " '" + tok + "'");
    }
    if (v < 1 || v > 1 << 20) {
        fail(path, std::string("malformed header: ") + name + " out of range");
    }
    return static_cast<int>(v);
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open file");

    const std::string magic = next_token(in);
    int channels = 0;
    if (magic == "P5") {
        channels = 1;
    } else if (magic == "P6") {
        channels = 3;
    } else {
        fail(path, "malformed header: unsupported magic '" + magic + "'");
    }

    const int width = parse_dim(path, next_token(in), "width");
    const int height = parse_dim(path, next_token(in), "height");
    const std::string maxval = next_token(in);
    if (maxval != "255") {
        fail(path, "unsupported max value '" + maxval + "' (must be 255)");
    }
    // The single whitespace byte after the max value was already consumed
    // by the tokenizer; raw pixel data starts here.

    Image img(width, height, channels);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
        fail(path, "truncated pixel data: expected " +
                       std::to_string(img.pixels.size()) + " bytes, got " +
                       std::to_string(in.gcount()));
    }
    return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
    if (!img.valid()) {
        throw std::invalid_argument("save_image: invalid image");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(path.string() + ": cannot open for writing");
    }
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) {
        throw std::runtime_error(path.string() + ": write failed");
    }
}

}  // namespace fundus
