#include <binpack/packer.hpp>
#include <binpack/svg.hpp>

#include <algorithm>
#include <sstream>
#include <vector>

namespace binpack {

namespace {

constexpr int kScale = 16;
constexpr int kMargin = 20;
constexpr int kGap = 30;

std::string color_of(int s) {
  // well-spaced hues keyed by placement order
  int hue = (s * 47) % 360;
  std::ostringstream c;
  c << "hsl(" << hue << ",65%,60%)";
  return c.str();
}

void rect(std::ostringstream& out, double x, double y, double w, double h,
          const std::string& fill) {
  out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
      << "\" fill=\"" << fill << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
}

void label(std::ostringstream& out, double x, double y, const std::string& text) {
  out << "<text x=\"" << x << "\" y=\"" << y << "\" font-family=\"monospace\" font-size=\"12\">"
      << text << "</text>\n";
}

struct Oriented {
  BoxDims d;
  int s, x, y, z;
  int order;  // placement order
};

}  // namespace

std::string render_svg(const Configuration& cfg) {
  cfg.require_complete();
  const BinSpec& bin = cfg.instance.bin;
  std::vector<Oriented> boxes;
  long long lc = 0;
  for (std::size_t i = 0; i < cfg.placements.size(); ++i) {
    const auto& p = cfg.placements[i];
    Oriented ob;
    ob.d = orient(cfg.instance.boxes[(std::size_t)p.s], p.o, bin.dims);
    ob.s = p.s;
    ob.x = p.x;
    ob.y = p.y;
    ob.z = p.z;
    ob.order = (int)i;
    lc = std::max(lc, (long long)p.x + ob.d.l);
    boxes.push_back(ob);
  }

  std::ostringstream body;
  int width = 0, height = 0;

  if (bin.dims == 2) {
    // one panel: x rightward, y upward
    int px = kMargin, py = kMargin + 14;
    int pw = (int)lc * kScale, ph = bin.W * kScale;
    label(body, px, py - 4, "top view " + std::to_string(lc) + "x" + std::to_string(bin.W));
    rect(body, px, py, pw, ph, "none");
    for (const auto& b : boxes)
      rect(body, px + b.x * kScale, py + (bin.W - b.y - b.d.w) * kScale, b.d.l * kScale,
           b.d.w * kScale, color_of(b.order));
    width = px + pw + kMargin;
    height = py + ph + kMargin;
  } else {
    // front view: y rightward, z upward; painter order far-to-near
    int px = kMargin, py = kMargin + 14;
    int fw = bin.W * kScale, fh = bin.H * kScale;
    label(body, px, py - 4, "front view");
    rect(body, px, py, fw, fh, "#eee");
    std::vector<Oriented> painter = boxes;
    std::stable_sort(painter.begin(), painter.end(),
                     [](const Oriented& a, const Oriented& b) {
                       return a.x + a.d.l < b.x + b.d.l;
                     });
    for (const auto& b : painter)
      rect(body, px + b.y * kScale, py + (bin.H - b.z - b.d.h) * kScale, b.d.w * kScale,
           b.d.h * kScale, color_of(b.order));

    // z slices: top views of each layer, 5 per row
    int sw = (int)lc * kScale, sh = bin.W * kScale;
    int x0 = px, y0 = py + fh + kGap;
    int col = 0, row = 0, per_row = 5;
    int max_x = px + fw;
    for (int z = 0; z < bin.H; ++z) {
      int sx = x0 + col * (sw + kGap);
      int sy = y0 + row * (sh + kGap + 14) + 14;
      label(body, sx, sy - 4, "z=" + std::to_string(z));
      rect(body, sx, sy, sw, sh, "#eee");
      for (const auto& b : boxes)
        if (b.z <= z && z < b.z + b.d.h)
          rect(body, sx + b.x * kScale, sy + (bin.W - b.y - b.d.w) * kScale, b.d.l * kScale,
               b.d.w * kScale, color_of(b.order));
      max_x = std::max(max_x, sx + sw);
      if (++col == per_row) {
        col = 0;
        ++row;
      }
    }
    int rows = (bin.H + per_row - 1) / per_row;
    width = max_x + kMargin;
    height = y0 + rows * (sh + kGap + 14) + kMargin;
  }

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << body.str() << "</svg>\n";
  return out.str();
}

}  // namespace binpack
