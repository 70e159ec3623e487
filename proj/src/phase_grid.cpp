#include "mf/phase_grid.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace mf {

PhaseGrid::PhaseGrid(int width_, int height_, std::vector<int> labels_, double physical_size_)
    : width(width_), height(height_), physical_size(physical_size_), labels(std::move(labels_)) {
  if (width < 1 || height < 1)
    throw std::runtime_error("PhaseGrid: empty raster");
  if (width != height)
    throw std::runtime_error("PhaseGrid: raster must be square, got " + std::to_string(width) +
                             "x" + std::to_string(height));
  if ((int)labels.size() != width * height)
    throw std::runtime_error("PhaseGrid: label count does not match dimensions");
  if (!(physical_size > 0.0))
    throw std::runtime_error("PhaseGrid: physical_size must be positive");
  for (int v : labels)
    if (v < 0) throw std::runtime_error("PhaseGrid: negative phase label");
}

int PhaseGrid::phase_of_pixel(int i, int j) const {
  if (i < 0 || i >= height || j < 0 || j >= width)
    throw std::out_of_range("PhaseGrid: pixel index (" + std::to_string(i) + "," +
                            std::to_string(j) + ") out of range");
  return labels[i * width + j];
}

std::set<int> PhaseGrid::label_set() const {
  return std::set<int>(labels.begin(), labels.end());
}

namespace {

std::string normalize_color_key(std::string key) {
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return key;
}

}  // namespace

Palette load_palette(std::istream& in) {
  Palette palette;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find_first_not_of(" \t");
    if (hash == std::string::npos) continue;
    if (line[hash] == '/' || (line[hash] == '#' && line.find(' ', hash) == std::string::npos &&
                              line.size() - hash != 7))
      continue;  // comment line (a color key "#rrggbb" is 7 chars followed by the id)
    std::istringstream ls(line);
    std::string key;
    int phase;
    if (!(ls >> key >> phase))
      throw std::runtime_error("palette: malformed line " + std::to_string(lineno) + ": " + line);
    if (phase < 0)
      throw std::runtime_error("palette: negative phase id on line " + std::to_string(lineno));
    palette[normalize_color_key(key)] = phase;
  }
  if (palette.empty()) throw std::runtime_error("palette: no entries");
  return palette;
}

Palette load_palette_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("palette: cannot open " + path);
  return load_palette(in);
}

PhaseGrid load_phase_grid_csv(std::istream& in, double physical_size) {
  std::vector<int> labels;
  std::string line;
  int width = -1, height = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string cell;
    int row_width = 0;
    while (std::getline(ls, cell, ',')) {
      try {
        labels.push_back(std::stoi(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("csv: non-integer cell '" + cell + "' in row " +
                                 std::to_string(height));
      }
      ++row_width;
    }
    if (width < 0)
      width = row_width;
    else if (row_width != width)
      throw std::runtime_error("csv: ragged row " + std::to_string(height));
    ++height;
  }
  if (height == 0) throw std::runtime_error("csv: empty raster");
  return PhaseGrid(width, height, std::move(labels), physical_size);
}

void write_phase_grid_csv(const PhaseGrid& grid, std::ostream& out) {
  for (int i = 0; i < grid.height; ++i) {
    for (int j = 0; j < grid.width; ++j) {
      if (j) out << ',';
      out << grid.labels[i * grid.width + j];
    }
    out << '\n';
  }
}

PhaseGrid load_phase_grid_pgm(std::istream& in, const Palette& palette, double physical_size) {
  auto next_token = [&in]() {
    std::string tok;
    for (;;) {
      int c = in.get();
      if (c == EOF) throw std::runtime_error("pgm: truncated header");
      if (std::isspace(c)) {
        if (!tok.empty()) return tok;
        continue;
      }
      if (c == '#') {  // comment to end of line
        std::string skip;
        std::getline(in, skip);
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back((char)c);
    }
  };

  if (next_token() != "P5") throw std::runtime_error("pgm: expected binary P5 magic");
  int width = std::stoi(next_token());
  int height = std::stoi(next_token());
  int maxval = std::stoi(next_token());
  if (width < 1 || height < 1) throw std::runtime_error("pgm: empty raster");
  if (maxval < 1 || maxval > 255) throw std::runtime_error("pgm: only 8-bit gray supported");
  // single whitespace already consumed by tokenizer; pixel data follows
  std::vector<unsigned char> raw((size_t)width * height);
  in.read(reinterpret_cast<char*>(raw.data()), (std::streamsize)raw.size());
  if (in.gcount() != (std::streamsize)raw.size()) throw std::runtime_error("pgm: truncated pixel data");

  // gray value -> phase, resolved once
  std::vector<int> gray_to_phase(256, -1);
  for (const auto& [key, phase] : palette) {
    if (key.empty() || key[0] == '#') continue;
    int g = std::stoi(key);
    if (g >= 0 && g <= 255) gray_to_phase[g] = phase;
  }

  std::vector<int> labels(raw.size());
  for (size_t k = 0; k < raw.size(); ++k) {
    int phase = gray_to_phase[raw[k]];
    if (phase < 0)
      throw std::runtime_error("pgm: gray value " + std::to_string((int)raw[k]) +
                               " not in palette");
    labels[k] = phase;
  }
  return PhaseGrid(width, height, std::move(labels), physical_size);
}

namespace {

struct PngReadCloser {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCloser() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

std::string hex_color(unsigned r, unsigned g, unsigned b) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

PhaseGrid load_phase_grid_png(const std::string& path, const Palette& palette,
                              double physical_size) {
  PngReadCloser ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw std::runtime_error("png: cannot open " + path);

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8))
    throw std::runtime_error("png: not a PNG file: " + path);

  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info) throw std::runtime_error("png: libpng init failed");
  if (setjmp(png_jmpbuf(ctx.png))) throw std::runtime_error("png: decode error in " + path);

  png_init_io(ctx.png, ctx.fp);
  png_set_sig_bytes(ctx.png, 8);
  png_read_info(ctx.png, ctx.info);

  png_uint_32 width, height;
  int bit_depth, color_type;
  png_get_IHDR(ctx.png, ctx.info, &width, &height, &bit_depth, &color_type, nullptr, nullptr,
               nullptr);
  if (color_type != PNG_COLOR_TYPE_PALETTE)
    throw std::runtime_error("png: only indexed (palette) PNG supported");
  if (bit_depth < 8) png_set_packing(ctx.png);  // expand 1/2/4-bit indices to bytes
  png_read_update_info(ctx.png, ctx.info);

  png_colorp plte = nullptr;
  int num_plte = 0;
  if (!png_get_PLTE(ctx.png, ctx.info, &plte, &num_plte) || num_plte <= 0)
    throw std::runtime_error("png: missing PLTE chunk");

  std::vector<int> index_to_phase(num_plte, -1);
  for (int k = 0; k < num_plte; ++k) {
    auto it = palette.find(hex_color(plte[k].red, plte[k].green, plte[k].blue));
    if (it != palette.end()) index_to_phase[k] = it->second;
  }

  std::vector<unsigned char> row(width);
  std::vector<int> labels((size_t)width * height);
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(ctx.png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x) {
      int idx = row[x];
      if (idx >= num_plte)
        throw std::runtime_error("png: pixel index outside PLTE");
      int phase = index_to_phase[idx];
      if (phase < 0)
        throw std::runtime_error("png: color " + hex_color(plte[idx].red, plte[idx].green,
                                                           plte[idx].blue) +
                                 " not in palette");
      labels[(size_t)y * width + x] = phase;
    }
  }
  return PhaseGrid((int)width, (int)height, std::move(labels), physical_size);
}

PhaseGrid load_phase_grid(const std::string& path, const Palette* palette, double physical_size) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });

  if (ext == "csv") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_phase_grid_csv(in, physical_size);
  }
  if (ext == "pgm") {
    if (!palette) throw std::runtime_error("pgm input requires a palette");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_phase_grid_pgm(in, *palette, physical_size);
  }
  if (ext == "png") {
    if (!palette) throw std::runtime_error("png input requires a palette");
    return load_phase_grid_png(path, *palette, physical_size);
  }
  throw std::runtime_error("unsupported input format '" + ext + "' for " + path);
}

}  // namespace mf
