"""Logical error rates, thresholds and qubit footprints from decoded shots.

Per-round rates invert the composition of ``rounds`` independent binary
channels: 1 - 2 p_total = (1 - 2 p_L)^rounds. Confidence bands hold every
probability whose binomial likelihood is within a factor of 1000 of the
maximum. Thresholds are the median crossing of adjacent distances' log-log
curves. Footprints fit log p_L linearly in d over the largest simulated
distances and project the smallest odd d that reaches a target rate.
"""
import collections
import csv
import logging
import math
import time

import humanfriendly
import numpy as np
import scipy.optimize
import scipy.stats

from . import circuit as circuit_mod
from . import decoder
from . import dem as dem_mod
from . import noisemodel
from . import sampler

LIKELIHOOD_FACTOR = 1000
BAND_RTOL = 1e-6

SHOTS_CEILING = 20000000
ERRORS_CEILING = 100000
# chunks sampled between stopping rule checks
WAVE_CHUNKS = 8

FIT_DISTANCES = 4
MIN_FIT_DISTANCES = 4

TARGETS = collections.OrderedDict((
  ('megaquop', 1e-6),
  ('gigaquop', 1e-9),
  ('teraquop', 1e-12),
))

CURVE_FIELDS = ('variant', 'eta', 'd', 'p', 'shots', 'errors', 'p_total', 'p_L',
                'lo', 'hi', 'memory', 'compilation', 'rounds')
THRESHOLD_FIELDS = ('variant', 'eta', 'memory', 'compilation', 'p_th',
                    'uncertainty', 'crossings')
FOOTPRINT_FIELDS = ('variant', 'eta', 'compilation', 'p', 'target', 'target_p_L',
                    'memory', 'd', 'qubits', 'slope', 'intercept', 'r_squared',
                    'saving_vs_sd')


class NoCrossing(ValueError):
  """Raised when no pair of distance curves crosses inside the p grid."""


class AboveThreshold(ValueError):
  """Raised when p_L doesn't decrease with distance, so there's nothing to project."""


ExperimentResult = collections.namedtuple('ExperimentResult', [
  'd', 'p', 'eta', 'variant', 'memory', 'compilation', 'rounds', 'shots',
  'errors', 'p_total', 'p_l', 'lo', 'hi'])

ThresholdEstimate = collections.namedtuple('ThresholdEstimate', [
  'p_th', 'uncertainty', 'crossings'])

Footprint = collections.namedtuple('Footprint', [
  'target', 'd', 'qubits', 'slope', 'intercept', 'r_squared'])


def per_round(p_total, rounds):
  """Converts a whole-experiment logical error probability to a per-round one.

  Args:
    p_total: float in [0, 0.5]. Larger values are clamped with a warning.
    rounds: int >= 1

  Returns:
    float
  """
  if rounds < 1:
    raise ValueError('rounds must be >= 1, got %r' % rounds)
  if p_total < 0:
    raise ValueError('p_total must be >= 0, got %r' % p_total)
  if p_total > .5:
    logging.warning('Logical error probability %g is saturated; clamping to 0.5',
                    p_total)
    p_total = .5
  return (1 - (1 - 2 * p_total) ** (1. / rounds)) / 2


def likelihood_band(k, n, factor=LIKELIHOOD_FACTOR, rtol=BAND_RTOL):
  """Returns the (lo, hi) range of q whose likelihood is within factor of the max.

  Args:
    k: int, observed errors
    n: int, trials
  """
  if n < 1 or not 0 <= k <= n:
    raise ValueError('Need 0 <= k <= n and n >= 1, got k=%r n=%r' % (k, n))

  mle = k / n
  floor = scipy.stats.binom.logpmf(k, n, mle) - math.log(factor)

  def excess(q):
    return scipy.stats.binom.logpmf(k, n, q) - floor

  def solve(a, b):
    return scipy.optimize.bisect(excess, a, b, xtol=1e-300, rtol=rtol)

  lo = 0. if k == 0 else solve(0., mle)
  hi = 1. if k == n else solve(mle, 1.)
  return lo, hi


def result(d, spec, memory, rounds, compilation, shots, errors):
  """Builds an :class:`ExperimentResult`. The band is converted to per round."""
  p_total = errors / shots
  lo, hi = likelihood_band(errors, shots)
  return ExperimentResult(
    d=d, p=spec.p, eta=spec.eta, variant=spec.variant, memory=memory,
    compilation=compilation, rounds=rounds, shots=shots, errors=errors,
    p_total=p_total, p_l=per_round(p_total, rounds),
    lo=per_round(lo, rounds), hi=per_round(min(hi, .5), rounds))


def collect(circuit, graph, shots_ceiling=SHOTS_CEILING,
            errors_ceiling=ERRORS_CEILING, seed=0,
            chunk_shots=sampler.CHUNK_SHOTS, workers=1):
  """Samples and decodes until either ceiling is reached.

  The stopping rule is checked after each wave of :data:`WAVE_CHUNKS`
  chunks, so the result only depends on the seed, not the worker count.

  Args:
    circuit: noise-bound :class:`circuit.CircuitProgram`
    graph: :class:`decoder.MatchingGraph` for the circuit's DEM

  Returns:
    (shots, logical errors) tuple of ints
  """
  if not any(inst.name in circuit_mod.NOISE_CHANNELS
             for inst in circuit.instructions):
    logging.info('Circuit is noiseless; no logical errors in %s shots',
                 humanfriendly.format_number(shots_ceiling))
    return shots_ceiling, 0

  start = time.time()
  shots = errors = 0
  chunk = 0
  while shots < shots_ceiling and errors < errors_ceiling:
    wave = min(WAVE_CHUNKS * chunk_shots, shots_ceiling - shots)
    batch = sampler.sample(circuit, wave, seed=seed, chunk_shots=chunk_shots,
                           workers=workers, first_chunk=chunk)
    predictions = decoder.decode_batch(graph, batch, workers=workers)
    errors += decoder.count_logical_errors(predictions, batch)
    shots += wave
    chunk += WAVE_CHUNKS
    logging.debug('%s shots, %s errors so far',
                  humanfriendly.format_number(shots),
                  humanfriendly.format_number(errors))

  logging.info('Collected %s shots, %s logical errors in %s',
               humanfriendly.format_number(shots),
               humanfriendly.format_number(errors),
               humanfriendly.format_timespan(time.time() - start))
  return shots, errors


def prepare(d, spec, memory=circuit_mod.MEMORY_H, rounds=None,
            compilation=circuit_mod.CNOT_CZ):
  """Builds the noisy circuit and its matching graph.

  Returns:
    (:class:`circuit.CircuitProgram`, :class:`decoder.MatchingGraph`) tuple
  """
  noisy = circuit_mod.attach_noise(
    circuit_mod.build_xzzx_memory(d, memory, rounds, compilation), spec)
  graph = decoder.build_matching_graph(
    dem_mod.decompose_graphlike(dem_mod.extract_dem(noisy)))
  return noisy, graph


def simulate(d, spec, memory=circuit_mod.MEMORY_H, rounds=None,
             compilation=circuit_mod.CNOT_CZ, shots_ceiling=SHOTS_CEILING,
             errors_ceiling=ERRORS_CEILING, seed=0,
             chunk_shots=sampler.CHUNK_SHOTS, workers=1):
  """Runs one memory experiment end to end.

  Returns:
    :class:`ExperimentResult`
  """
  rounds = rounds or 3 * d
  noisy, graph = prepare(d, spec, memory, rounds, compilation)
  shots, errors = collect(noisy, graph, shots_ceiling=shots_ceiling,
                          errors_ceiling=errors_ceiling, seed=seed,
                          chunk_shots=chunk_shots, workers=workers)
  res = result(d, spec, memory, rounds, compilation, shots, errors)
  logging.info('d=%d p=%g eta=%s %s: p_L = %.3g per round (%.3g, %.3g)', d,
               spec.p, spec.eta, spec.variant, res.p_l, res.lo, res.hi)
  return res


def _crossing(low, high):
  """Finds where log p_L of the larger distance rises above the smaller one's.

  Args:
    low, high: dicts, p => p_L for the smaller and larger distance

  Returns:
    float p, or None
  """
  ps = sorted(p for p in set(low) & set(high) if low[p] > 0 and high[p] > 0)
  gaps = [math.log(high[p]) - math.log(low[p]) for p in ps]
  for (p_a, g_a), (p_b, g_b) in zip(zip(ps, gaps), zip(ps[1:], gaps[1:])):
    if g_a < 0 <= g_b:
      t = g_a / (g_a - g_b)
      return math.exp(math.log(p_a) + t * (math.log(p_b) - math.log(p_a)))
  return None


def estimate_threshold(curves):
  """Estimates the threshold from per-distance p_L curves.

  Args:
    curves: dict, distance => sequence of (p, p_L) or (p, p_L, band) tuples

  Returns:
    :class:`ThresholdEstimate`. crossings maps adjacent (d1, d2) pairs to
    their crossing p.

  Raises:
    :class:`NoCrossing`
  """
  if len(curves) < 2:
    raise NoCrossing('Need at least two distances, got %s' % sorted(curves))

  points = {d: {pt[0]: pt[1] for pt in curve} for d, curve in curves.items()}
  crossings = collections.OrderedDict()
  distances = sorted(points)
  for d1, d2 in zip(distances, distances[1:]):
    crossing = _crossing(points[d1], points[d2])
    if crossing is None:
      logging.warning('Distances %d and %d do not cross inside the p grid',
                      d1, d2)
    else:
      crossings[(d1, d2)] = crossing

  if not crossings:
    raise NoCrossing('No pair of distances %s crosses; widen the p grid' %
                     distances)

  p_th = float(np.median(list(crossings.values())))
  uncertainty = max(abs(c - p_th) for c in crossings.values())
  logging.info('Threshold %.4g +/- %.2g from %d crossings', p_th, uncertainty,
               len(crossings))
  return ThresholdEstimate(p_th, uncertainty, crossings)


def qubits(d):
  """Physical qubits per logical qubit: d^2 data plus d^2 - 1 checks."""
  return 2 * d * d - 1


def _odd_at_least(x):
  d = max(3, int(math.ceil(x - 1e-9)))
  return d if d % 2 else d + 1


def footprint(points, target):
  """Projects the distance needed to reach a target per-round p_L.

  Args:
    points: dict, odd distance => p_L at a fixed physical error rate
    target: float target p_L, or a :data:`TARGETS` name

  Returns:
    :class:`Footprint`

  Raises:
    :class:`AboveThreshold`, ValueError
  """
  target = TARGETS.get(target, target)
  distances = sorted(points)
  if len(distances) < MIN_FIT_DISTANCES:
    raise ValueError('Need p_L at %d or more distances, got %s' %
                     (MIN_FIT_DISTANCES, distances))
  values = [points[d] for d in distances]
  if (any(v <= 0 for v in values) or
      any(b >= a for a, b in zip(values, values[1:]))):
    raise AboveThreshold('p_L %s does not decrease with distance %s' %
                         (values, distances))

  ds = np.array(distances[-FIT_DISTANCES:], dtype=float)
  logs = np.log([points[d] for d in distances[-FIT_DISTANCES:]])
  slope, intercept = np.polyfit(ds, logs, 1)
  if slope >= 0:
    raise AboveThreshold('Fitted slope %g is not negative' % slope)

  residuals = logs - (intercept + slope * ds)
  total = np.sum((logs - logs.mean()) ** 2)
  r_squared = 1 - np.sum(residuals ** 2) / total if total > 0 else 1.

  d = _odd_at_least((math.log(target) - intercept) / slope)
  return Footprint(target, d, qubits(d), float(slope), float(intercept),
                   float(r_squared))


def limiting_footprint(per_memory, target):
  """Returns (memory, :class:`Footprint`) for the memory that needs the larger d.

  Args:
    per_memory: dict, memory => points as in :func:`footprint`
  """
  fits = [(memory, footprint(points, target))
          for memory, points in sorted(per_memory.items())]
  return max(fits, key=lambda fit: fit[1].d)


def spacetime_saving(d_biased, d_baseline):
  """Fractional decrease of the d^3 space-time cost."""
  for d in d_biased, d_baseline:
    if not isinstance(d, int) or d < 3 or d % 2 == 0:
      raise ValueError('Distances must be odd integers >= 3, got %r' % d)
  return 1 - (d_biased / d_baseline) ** 3


def curve_row(res):
  """Converts an :class:`ExperimentResult` to a curves.csv row dict.

  SD rows get variant 'sd', since SD overrides every variant.
  """
  sd = res.eta == noisemodel.SD
  return {
    'variant': noisemodel.SD if sd else res.variant,
    'eta': noisemodel.SD if sd else float(res.eta),
    'd': res.d,
    'p': float(res.p),
    'shots': res.shots,
    'errors': res.errors,
    'p_total': res.p_total,
    'p_L': res.p_l,
    'lo': res.lo,
    'hi': res.hi,
    'memory': res.memory,
    'compilation': res.compilation,
    'rounds': res.rounds,
  }


def write_csv(path, fields, rows):
  with open(path, 'w', newline='') as f:
    writer = csv.DictWriter(f, fieldnames=fields)
    writer.writeheader()
    for row in rows:
      writer.writerow(row)
  logging.info('Wrote %d rows to %s', len(rows), path)


def read_curves(path):
  """Reads curves.csv rows, converting numeric columns."""
  rows = []
  with open(path, newline='') as f:
    for row in csv.DictReader(f):
      for field in 'p', 'p_total', 'p_L', 'lo', 'hi':
        row[field] = float(row[field])
      for field in 'd', 'shots', 'errors', 'rounds':
        row[field] = int(row[field])
      if row['eta'] != noisemodel.SD:
        row['eta'] = float(row['eta'])
      rows.append(row)
  return rows


def _model_key(row):
  return row['variant'], str(row['eta'])


def threshold_rows(curve_rows):
  """Estimates a threshold per (variant, eta, memory, compilation) group.

  Groups without a crossing are logged and skipped.
  """
  groups = collections.OrderedDict()
  for row in curve_rows:
    key = _model_key(row) + (row['memory'], row['compilation'])
    groups.setdefault(key, collections.defaultdict(list))[row['d']].append(
      (row['p'], row['p_L']))

  out = []
  for (variant, eta, memory, compilation), curves in groups.items():
    try:
      est = estimate_threshold(curves)
    except NoCrossing as e:
      logging.warning('%s eta=%s %s %s: %s', variant, eta, memory, compilation, e)
      continue
    out.append({
      'variant': variant,
      'eta': eta,
      'memory': memory,
      'compilation': compilation,
      'p_th': est.p_th,
      'uncertainty': est.uncertainty,
      'crossings': ' '.join('%d-%d:%.6g' % (d1, d2, c)
                            for (d1, d2), c in est.crossings.items()),
    })
  return out


def footprint_rows(curve_rows, targets=tuple(TARGETS)):
  """Projects footprints per (variant, eta, compilation, p) group and target.

  Uses the worse of the H and V memories when both are present, and reports
  the space-time saving against the SD group at the same p and compilation.
  """
  groups = collections.OrderedDict()
  for row in curve_rows:
    key = _model_key(row) + (row['compilation'], row['p'])
    groups.setdefault(key, collections.defaultdict(dict))[row['memory']][
      row['d']] = row['p_L']

  fits = collections.OrderedDict()
  for key, per_memory in groups.items():
    for target in targets:
      try:
        fits[key + (target,)] = limiting_footprint(per_memory, target)
      except ValueError as e:
        logging.warning('No %s footprint for %s: %s', target, key, e)

  out = []
  for (variant, eta, compilation, p, target), (memory, fit) in fits.items():
    baseline = fits.get((noisemodel.SD, noisemodel.SD, compilation, p, target))
    out.append({
      'variant': variant,
      'eta': eta,
      'compilation': compilation,
      'p': p,
      'target': target,
      'target_p_L': fit.target,
      'memory': memory,
      'd': fit.d,
      'qubits': fit.qubits,
      'slope': fit.slope,
      'intercept': fit.intercept,
      'r_squared': fit.r_squared,
      'saving_vs_sd': (spacetime_saving(fit.d, baseline[1].d)
                       if baseline else ''),
    })
  return out
