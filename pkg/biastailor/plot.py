"""Self-contained SVG plots of threshold curves and footprint fits.

Threshold plots show p_L against p for each distance on log-log axes, with
likelihood bands shaded. Footprint plots show p_L against d at a fixed p on a
log y axis, with the fitted projection and the target rates.
"""
import collections
import logging
import math
import os
import re

import jinja2

from . import analysis

THRESHOLD_TEMPLATE = 'threshold.svg'
FOOTPRINT_TEMPLATE = 'footprint.svg'

WIDTH = 640
HEIGHT = 480
# left, top, right, bottom
MARGINS = (80, 40, 130, 60)
COLORS = ('#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b',
          '#e377c2', '#17becf')
UNSAFE_RE = re.compile(r'[^A-Za-z0-9.+-]+')

jinja_env = jinja2.Environment(
  loader=jinja2.PackageLoader(__package__, 'templates'), autoescape=True)

Tick = collections.namedtuple('Tick', ['pos', 'label'])
Series = collections.namedtuple('Series', [
  'label', 'color', 'points', 'line', 'band'])


class Axis(object):
  """Maps data values to pixels along one axis, linearly or in log10."""

  def __init__(self, lo, hi, start, end, log=False):
    if log:
      lo, hi = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if hi <= lo:
      lo, hi = lo - 1, hi + 1
    self.lo, self.hi, self.start, self.end, self.log = lo, hi, start, end, log

  def __call__(self, value):
    if self.log:
      value = math.log10(value)
    frac = (value - self.lo) / (self.hi - self.lo)
    return round(self.start + frac * (self.end - self.start), 2)

  def ticks(self):
    if self.log:
      return [Tick(self(10. ** e), '1e%d' % e)
              for e in range(int(self.lo), int(self.hi) + 1)]
    step = max(1, int(math.ceil((self.hi - self.lo) / 10.)))
    return [Tick(self(v), '%d' % v)
            for v in range(int(math.ceil(self.lo)), int(self.hi) + 1, step)]


def _frame():
  left, top, right, bottom = MARGINS
  return {'width': WIDTH, 'height': HEIGHT, 'left': left, 'top': top,
          'right': WIDTH - right, 'bottom': HEIGHT - bottom}


def _points(pairs):
  return ' '.join('%s,%s' % pair for pair in pairs)


def threshold_svg(curves, title='', p_th=None):
  """Renders a threshold plot.

  Args:
    curves: dict, distance => sequence of (p, p_L, lo, hi) tuples. Points with
      p_L = 0 are left out.
    title: string
    p_th: float, optional threshold estimate to mark

  Returns:
    string SVG
  """
  frame = _frame()
  kept = {d: [pt for pt in curve if pt[1] > 0] for d, curve in curves.items()}
  kept = {d: sorted(curve) for d, curve in kept.items() if curve}
  if not kept:
    raise ValueError('Nothing to plot: every p_L is zero')

  all_points = [pt for curve in kept.values() for pt in curve]
  x = Axis(min(pt[0] for pt in all_points), max(pt[0] for pt in all_points),
           frame['left'], frame['right'], log=True)
  y = Axis(min(max(pt[2], pt[1] / 10) for pt in all_points),
           max(min(pt[3], .5) for pt in all_points),
           frame['bottom'], frame['top'], log=True)

  def clamp(v):
    return min(max(v, 10. ** y.lo), 10. ** y.hi)

  series = []
  for i, (d, curve) in enumerate(sorted(kept.items())):
    points = [(x(p), y(clamp(p_l))) for p, p_l, _, _ in curve]
    band = ([(x(p), y(clamp(hi))) for p, _, _, hi in curve] +
            [(x(p), y(clamp(lo))) for p, _, lo, _ in reversed(curve)])
    series.append(Series('d = %d' % d, COLORS[i % len(COLORS)], points,
                         _points(points), _points(band)))

  marker = None
  if p_th and 10. ** x.lo <= p_th <= 10. ** x.hi:
    marker = {'x': x(p_th), 'label': 'p_th = %.3g%%' % (p_th * 100)}

  return jinja_env.get_template(THRESHOLD_TEMPLATE).render(
    frame=frame, title=title, series=series, marker=marker,
    x_ticks=x.ticks(), y_ticks=y.ticks(), x_label='physical error rate p',
    y_label='logical error rate per round')


def footprint_svg(points, fit=None, targets=analysis.TARGETS, title=''):
  """Renders a footprint plot.

  Args:
    points: dict, distance => (p_L, lo, hi)
    fit: :class:`analysis.Footprint`, optional projection to draw
    targets: dict, name => target p_L to mark
    title: string

  Returns:
    string SVG
  """
  frame = _frame()
  kept = sorted((d, pt) for d, pt in points.items() if pt[0] > 0)
  if not kept:
    raise ValueError('Nothing to plot: every p_L is zero')

  d_max = max([d for d, _ in kept] + ([fit.d] if fit else []))
  values = ([pt[0] for _, pt in kept] + [max(pt[1], pt[0] / 10) for _, pt in kept]
            + list(targets.values()))
  x = Axis(min(d for d, _ in kept) - 1, d_max + 1, frame['left'], frame['right'])
  y = Axis(min(values), min(max(pt[2] for _, pt in kept), .5), frame['bottom'],
           frame['top'], log=True)

  def clamp(v):
    return min(max(v, 10. ** y.lo), 10. ** y.hi)

  dots = [(x(d), y(pt[0])) for d, pt in kept]
  bars = [{'x': x(d), 'lo': y(clamp(pt[1])), 'hi': y(clamp(pt[2]))}
          for d, pt in kept]

  projection = None
  if fit:
    ends = [x.lo, x.hi]
    projection = _points((x(d), y(clamp(math.exp(fit.intercept + fit.slope * d))))
                         for d in ends)

  lines = [{'y': y(value), 'label': '%s %.0e' % (name, value)}
           for name, value in targets.items()]

  return jinja_env.get_template(FOOTPRINT_TEMPLATE).render(
    frame=frame, title=title, dots=dots, bars=bars, projection=projection,
    targets=lines, fit=fit, x_ticks=x.ticks(), y_ticks=y.ticks(),
    x_label='code distance d', y_label='logical error rate per round')


def write(svg, path):
  with open(path, 'w') as f:
    f.write(svg)
  logging.info('Wrote %s', path)


def _filename(*parts):
  return UNSAFE_RE.sub('_', '_'.join(str(p) for p in parts)) + '.svg'


def plot_curves(rows, out_dir, thresholds=()):
  """Writes threshold and footprint plots for curves.csv rows.

  Args:
    rows: sequence of dicts, from :func:`analysis.read_curves`
    out_dir: string directory
    thresholds: sequence of thresholds.csv row dicts, to mark p_th

  Returns:
    list of string paths written
  """
  p_ths = {(row['variant'], str(row['eta']), row['memory'], row['compilation']):
           float(row['p_th']) for row in thresholds}

  by_model = collections.OrderedDict()
  by_p = collections.OrderedDict()
  for row in rows:
    key = (row['variant'], str(row['eta']), row['memory'], row['compilation'])
    by_model.setdefault(key, collections.defaultdict(list))[row['d']].append(
      (row['p'], row['p_L'], row['lo'], row['hi']))
    by_p.setdefault(key + (row['p'],), {})[row['d']] = (
      row['p_L'], row['lo'], row['hi'])

  paths = []
  for key, curves in by_model.items():
    if len({p for curve in curves.values() for p, _, _, _ in curve}) < 2:
      continue
    try:
      svg = threshold_svg(curves, title='%s eta=%s %s memory, %s' % key,
                          p_th=p_ths.get(key))
    except ValueError as e:
      logging.warning('Skipping threshold plot for %s: %s', key, e)
      continue
    path = os.path.join(out_dir, _filename('threshold', *key))
    write(svg, path)
    paths.append(path)

  for key, points in by_p.items():
    if len(points) < analysis.MIN_FIT_DISTANCES:
      continue
    try:
      fit = analysis.footprint({d: pt[0] for d, pt in points.items()},
                               'megaquop')
    except ValueError as e:
      logging.info('No footprint fit for %s: %s', key, e)
      fit = None
    try:
      svg = footprint_svg(points, fit=fit,
                          title='%s eta=%s %s memory, %s, p=%g' % key)
    except ValueError as e:
      logging.warning('Skipping footprint plot for %s: %s', key, e)
      continue
    path = os.path.join(out_dir, _filename('footprint', *key))
    write(svg, path)
    paths.append(path)

  return paths
