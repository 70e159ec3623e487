#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace mf {

/// Integer phase label per pixel on a square raster. The grid is the
/// geometric ground truth for meshing; rows are stored in image order
/// (row 0 = top scanline). `phase_cell` converts to mesh orientation
/// (cell row 0 = bottom of the domain).
struct PhaseGrid {
  int width = 0;
  int height = 0;
  double physical_size = 1.0;  // side length of the square domain
  std::vector<int> labels;     // row-major, size width*height

  PhaseGrid() = default;
  PhaseGrid(int width_, int height_, std::vector<int> labels_, double physical_size_ = 1.0);

  double pixel_size() const { return physical_size / width; }

  // Image-order access: i = row from top, j = column.
  int phase_of_pixel(int i, int j) const;

  // Mesh-order access: ix = column, iy = row from bottom.
  int phase_cell(int ix, int iy) const { return labels[(height - 1 - iy) * width + ix]; }

  std::set<int> label_set() const;
};

// Palette maps a color key to a phase id. Keys are either a decimal gray
// value ("0".."255", used for PGM) or a hex color "#rrggbb" (used for PNG).
using Palette = std::map<std::string, int>;

Palette load_palette(std::istream& in);
Palette load_palette_file(const std::string& path);

// Format dispatch on file extension (.csv, .pgm, .png). The palette is
// required for PGM/PNG and ignored for CSV.
PhaseGrid load_phase_grid(const std::string& path, const Palette* palette,
                          double physical_size = 1.0);

PhaseGrid load_phase_grid_csv(std::istream& in, double physical_size = 1.0);
PhaseGrid load_phase_grid_pgm(std::istream& in, const Palette& palette,
                              double physical_size = 1.0);
PhaseGrid load_phase_grid_png(const std::string& path, const Palette& palette,
                              double physical_size = 1.0);

void write_phase_grid_csv(const PhaseGrid& grid, std::ostream& out);

}  // namespace mf
