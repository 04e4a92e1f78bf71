#include "lumennav/image.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lumennav {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("file not found: '" + path.string() + "'");
  return in;
}

// Next whitespace-delimited header token, skipping '#' comments. Comment
// text is appended to `comments` when given.
std::string header_token(std::istream& in, std::string* comments = nullptr) {
  std::string token;
  for (;;) {
    int c = in.peek();
    if (c == EOF) break;
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      if (comments) *comments += line + "\n";
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(in.get()));
  }
  if (token.empty()) throw std::runtime_error("truncated image header");
  return token;
}

}  // namespace

void write_pfm(const std::filesystem::path& path, const DepthImage& depth) {
  auto out = open_out(path);
  const int w = depth.width(), h = depth.height();
  out << "Pf\n# range along ray in mm; invalid=0; far_clip " << depth.far_clip
      << "\n" << w << " " << h << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(w));
  for (int r = h - 1; r >= 0; --r) {
    for (int c = 0; c < w; ++c) {
      row[static_cast<std::size_t>(c)] =
          depth.valid(r, c) ? static_cast<float>(depth.range(r, c)) : 0.0f;
    }
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& v : row) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        bits = __builtin_bswap32(bits);
        std::memcpy(&v, &bits, 4);
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

DepthImage read_pfm(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string comments;
  if (header_token(in, &comments) != "Pf") {
    throw std::runtime_error("'" + path.string() + "' is not a single-channel PFM");
  }
  const int w = std::stoi(header_token(in, &comments));
  const int h = std::stoi(header_token(in, &comments));
  const double scale = std::stod(header_token(in, &comments));
  if (w <= 0 || h <= 0) throw std::runtime_error("bad PFM dimensions");
  double far_clip = 0.0;
  if (auto pos = comments.find("far_clip "); pos != std::string::npos) {
    far_clip = std::stod(comments.substr(pos + 9));
  }
  DepthImage depth(w, h, far_clip);
  std::vector<float> row(static_cast<std::size_t>(w));
  const bool swap = (scale < 0.0) != (std::endian::native == std::endian::little);
  for (int r = h - 1; r >= 0; --r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated PFM data in '" + path.string() + "'");
    for (int c = 0; c < w; ++c) {
      float v = row[static_cast<std::size_t>(c)];
      if (swap) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        bits = __builtin_bswap32(bits);
        std::memcpy(&v, &bits, 4);
      }
      if (v > 0.0f && std::isfinite(v)) {
        depth.range(r, c) = v;
        depth.valid(r, c) = true;
      }
    }
  }
  if (far_clip <= 0.0 && depth.valid_count() > 0) {
    depth.far_clip = (depth.valid.select(depth.range, 0.0)).maxCoeff();
  }
  return depth;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  auto out = open_out(path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.data.data()),
            static_cast<std::streamsize>(image.data.size()));
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

RgbImage read_ppm(const std::filesystem::path& path) {
  auto in = open_in(path);
  if (header_token(in) != "P6") {
    throw std::runtime_error("'" + path.string() + "' is not a binary PPM");
  }
  const int w = std::stoi(header_token(in));
  const int h = std::stoi(header_token(in));
  const int maxval = std::stoi(header_token(in));
  if (maxval != 255) throw std::runtime_error("only 8-bit PPM is supported");
  RgbImage image(w, h);
  in.read(reinterpret_cast<char*>(image.data.data()),
          static_cast<std::streamsize>(image.data.size()));
  if (!in) throw std::runtime_error("truncated PPM data in '" + path.string() + "'");
  return image;
}

}  // namespace lumennav
