#!/usr/bin/env python
"""Command line front end for biastailor experiments.

Every subcommand reads and writes plain files, so a pipeline can be replayed
from any step::

  cli.py characterize --gate CNOT --table cnot_bias.json
  cli.py build --config exp.json --out circuit.txt
  cli.py sample --circuit circuit.txt --shots 100000 --out shots.b8
  cli.py decode --circuit circuit.txt --shots shots.b8 --write-dem dem.txt
  cli.py decode --dem dem.txt --shots shots.b8
  cli.py run --config exp.json
  cli.py threshold out/curves.csv
  cli.py footprint out/curves.csv
  cli.py plot out/curves.csv

Config files are JSON; see docs/formats.md for the fields. Any field can be
overridden with a BIASTAILOR_<FIELD> environment variable, and --seed,
--workers and --out override both.

Exit codes: 0 ok, 1 compute error, 2 configuration or input error.
"""
import argparse
import csv
import itertools
import logging
import numbers
import os
import sys

import humanfriendly
from oauth_dropins.webutil import util
from oauth_dropins.webutil.util import json_dumps, json_loads

from biastailor import (
  analysis,
  circuit,
  decoder,
  dem,
  gatechar,
  noisemodel,
  pauli,
  plot,
  sampler,
)

ENV_PREFIX = 'BIASTAILOR_'
DEFAULTS = {
  'distance': 3,
  'memory': circuit.MEMORY_H,
  'rounds': None,
  'compilation': circuit.CNOT_CZ,
  'variant': noisemodel.HBD_BP_CZ,
  'p': .001,
  'eta': noisemodel.SD,
  'eta_cnot': None,
  'shots_ceiling': analysis.SHOTS_CEILING,
  'errors_ceiling': analysis.ERRORS_CEILING,
  'seed': 0,
  'out': 'out',
  'workers': 1,
  'residual_bias_table': None,
  'chunk_shots': sampler.CHUNK_SHOTS,
}
# fields that may hold a list, which expands into a sweep
SWEEP_FIELDS = ('distance', 'p', 'eta', 'memory')

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_CONFIG = 2

CONFIG_ERRORS = (noisemodel.NoiseConfigError, circuit.CircuitFormatError,
                 dem.DemFormatError, sampler.ShotDumpError, OSError)


class ConfigError(ValueError):
  """Raised for invalid experiment configs and command line arguments."""


def _env_value(raw):
  """Parses an environment override as JSON, falling back to the raw string."""
  try:
    return json_loads(raw)
  except ValueError:
    return raw


def _as_list(value):
  return list(value) if isinstance(value, (list, tuple)) else [value]


def _size(field, value):
  if isinstance(value, str):
    try:
      value = humanfriendly.parse_size(value)
    except humanfriendly.InvalidSize as e:
      raise ConfigError('%s: %s' % (field, e))
  if not isinstance(value, numbers.Integral) or value < 1:
    raise ConfigError('%s must be a positive integer, got %r' % (field, value))
  return int(value)


def validate_config(config):
  """Checks and normalizes a config dict in place.

  Returns:
    the config

  Raises:
    :class:`ConfigError`, :class:`noisemodel.NoiseConfigError`
  """
  unknown = set(config) - set(DEFAULTS)
  if unknown:
    raise ConfigError('Unknown config fields: %s' % ', '.join(sorted(unknown)))

  for d in _as_list(config['distance']):
    if not isinstance(d, int) or d < 3 or d % 2 == 0:
      raise ConfigError('distance must be odd integers >= 3, got %r' % d)
  for memory in _as_list(config['memory']):
    if memory not in circuit.MEMORIES:
      raise ConfigError('memory must be one of %s, got %r' %
                        (circuit.MEMORIES, memory))
  if config['compilation'] not in circuit.COMPILATIONS:
    raise ConfigError('compilation must be one of %s, got %r' %
                      (circuit.COMPILATIONS, config['compilation']))
  rounds = config['rounds']
  if rounds is not None and (not isinstance(rounds, int) or rounds < 1):
    raise ConfigError('rounds must be a positive integer or null, got %r' %
                      rounds)

  for field in 'shots_ceiling', 'errors_ceiling', 'chunk_shots', 'workers':
    config[field] = _size(field, config[field])
  seed = config['seed']
  if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
    raise ConfigError('seed must be an integer in [0, 2^64), got %r' % seed)

  for p, eta in itertools.product(_as_list(config['p']),
                                  _as_list(config['eta'])):
    if not isinstance(p, numbers.Real) or isinstance(p, bool):
      raise ConfigError('p must be a number, got %r' % p)
    # eta_cnot may come from the residual bias table later
    noisemodel.noise_spec(p, eta, config['variant'],
                          eta_cnot=config['eta_cnot'] or 1.)

  return config


def load_config(path=None, environ=None, **overrides):
  """Reads, overrides and validates an experiment config.

  Args:
    path: string JSON file path, or None for defaults only
    environ: dict, defaults to os.environ
    overrides: field values that take precedence. None values are ignored.

  Returns:
    dict config
  """
  config = dict(DEFAULTS)
  if path:
    with open(path) as f:
      try:
        loaded = json_loads(f.read())
      except ValueError as e:
        raise ConfigError('%s is not valid JSON: %s' % (path, e))
    if not isinstance(loaded, dict):
      raise ConfigError('%s must hold a JSON object' % path)
    config.update(loaded)

  environ = os.environ if environ is None else environ
  for field in DEFAULTS:
    raw = environ.get(ENV_PREFIX + field.upper())
    if raw is not None:
      config[field] = _env_value(raw)

  config.update({k: v for k, v in overrides.items() if v is not None})
  return validate_config(config)


def sweep(config):
  """Returns the list of (distance, p, eta, memory) points in a config."""
  return list(itertools.product(*(_as_list(config[f]) for f in SWEEP_FIELDS)))


def spec_for(config, p, eta):
  """Builds the :class:`noisemodel.NoiseSpec` for one sweep point."""
  eta_cnot = config['eta_cnot']
  if (config['variant'] == noisemodel.HBD_RESIDUAL_CNOT and
      eta != noisemodel.SD and eta_cnot is None):
    eta_cnot = noisemodel.residual_bias_lookup(
      eta, path=config['residual_bias_table'])
  return noisemodel.noise_spec(p, eta, config['variant'], eta_cnot=eta_cnot)


def _single_point(config):
  points = sweep(config)
  if len(points) != 1:
    raise ConfigError('This command takes a single point, config has %d' %
                      len(points))
  return points[0]


def _out_path(args, config, default):
  out = args.out or config['out']
  if os.path.splitext(out)[1]:
    return out
  os.makedirs(out, exist_ok=True)
  return os.path.join(out, default)


def _out_dir(path):
  directory = os.path.dirname(os.path.abspath(path))
  os.makedirs(directory, exist_ok=True)
  return directory


def _config(args):
  return load_config(args.config, seed=args.seed, workers=args.workers,
                     out=getattr(args, 'out', None))


def characterize(args):
  etas = args.eta or gatechar.ETA_GRID
  profiles = gatechar.characterize_sweep(
    args.gate, etas, lambda_biased_total=args.lambda_biased_total,
    workers=args.workers or 1)

  labels = [p.label() for p in pauli.all_paulis(profiles[0].n)]
  rows = []
  for prof in profiles:
    row = {'gate': prof.gate, 'eta_sys': prof.eta_sys,
           'eta_residual': prof.residual_bias,
           'p_identity': prof.pauli_probs[0],
           'process_infidelity': prof.process_infidelity,
           'offdiag_max': prof.offdiag_max}
    row.update(zip(labels[1:], prof.pauli_probs[1:]))
    rows.append(row)
    print('%s eta_sys=%g eta_residual=%.4g infidelity=%.4g' % (
      prof.gate, prof.eta_sys, prof.residual_bias, prof.process_infidelity))

  if args.out:
    _out_dir(args.out)
    analysis.write_csv(args.out, ['gate', 'eta_sys', 'eta_residual',
                                  'p_identity'] + labels[1:] +
                       ['process_infidelity', 'offdiag_max'], rows)

  if args.table:
    if args.gate != 'CNOT':
      raise ConfigError('--table only applies to CNOT')
    _out_dir(args.table)
    noisemodel.ResidualBiasTable(
      [prof.eta_sys for prof in profiles],
      [prof.residual_bias for prof in profiles]).save(args.table)


def build(args):
  config = _config(args)
  d, p, eta, memory = _single_point(config)
  program = circuit.build_xzzx_memory(d, memory, config['rounds'],
                                      config['compilation'])
  if not args.markers:
    program = circuit.attach_noise(program, spec_for(config, p, eta))

  path = _out_path(args, config, 'circuit.txt')
  with open(path, 'w') as f:
    f.write(program.to_text())
  logging.info('Wrote %d instructions to %s', len(program.instructions), path)


def _read_circuit(path):
  with open(path) as f:
    return circuit.parse(f.read())


def sample(args):
  config = _config(args)
  program = _read_circuit(args.circuit)
  shots = _size('shots', args.shots) if args.shots else config['shots_ceiling']
  batch = sampler.sample(program, shots, seed=config['seed'],
                         chunk_shots=config['chunk_shots'],
                         workers=config['workers'])
  sampler.dump(batch, _out_path(args, config, 'shots.b8'))


def decode(args):
  config = _config(args)
  if args.dem:
    with open(args.dem) as f:
      model = dem.parse(f.read())
  else:
    model = dem.extract_dem(_read_circuit(args.circuit))
  model = dem.decompose_graphlike(model)
  if args.write_dem:
    _out_dir(args.write_dem)
    with open(args.write_dem, 'w') as f:
      f.write(dem.to_text(model))

  batch = sampler.load(args.shots)
  graph = decoder.build_matching_graph(model)
  predictions = decoder.decode_batch(graph, batch, workers=config['workers'])
  errors = decoder.count_logical_errors(predictions, batch)

  if args.predictions:
    _out_dir(args.predictions)
    actual = batch.observables()
    analysis.write_csv(args.predictions, ('shot', 'predicted', 'actual'), [
      {'shot': s, 'predicted': ''.join(map(str, predictions[s])),
       'actual': ''.join(map(str, actual[s]))} for s in range(batch.shots)])

  summary = {'shots': batch.shots, 'errors': errors,
             'p_total': errors / batch.shots}
  print(json_dumps(summary, indent=2))
  if args.out:
    _out_dir(args.out)
    with open(args.out, 'w') as f:
      f.write(json_dumps(summary, indent=2))


def run(args):
  config = _config(args)
  out = config['out']
  os.makedirs(out, exist_ok=True)

  results = []
  for d, p, eta, memory in sweep(config):
    results.append(analysis.simulate(
      d, spec_for(config, p, eta), memory=memory, rounds=config['rounds'],
      compilation=config['compilation'],
      shots_ceiling=config['shots_ceiling'],
      errors_ceiling=config['errors_ceiling'], seed=config['seed'],
      chunk_shots=config['chunk_shots'], workers=config['workers']))

  rows = [analysis.curve_row(res) for res in results]
  analysis.write_csv(os.path.join(out, 'curves.csv'), analysis.CURVE_FIELDS,
                     rows)
  with open(os.path.join(out, 'results.json'), 'w') as f:
    f.write(json_dumps({'config': util.trim_nulls(config), 'results': rows},
                       indent=2))
  _analyze(rows, out)


def _analyze(rows, out):
  """Writes thresholds.csv, footprints.csv and plots for curve rows."""
  thresholds = analysis.threshold_rows(rows)
  if thresholds:
    analysis.write_csv(os.path.join(out, 'thresholds.csv'),
                       analysis.THRESHOLD_FIELDS, thresholds)
  footprints = analysis.footprint_rows(rows)
  if footprints:
    analysis.write_csv(os.path.join(out, 'footprints.csv'),
                       analysis.FOOTPRINT_FIELDS, footprints)
  plot.plot_curves(rows, out, thresholds=thresholds)
  return thresholds, footprints


def _curves_and_out(args):
  rows = analysis.read_curves(args.curves)
  out = args.out or os.path.dirname(os.path.abspath(args.curves))
  os.makedirs(out, exist_ok=True)
  return rows, out


def threshold(args):
  rows, out = _curves_and_out(args)
  thresholds = analysis.threshold_rows(rows)
  if not thresholds:
    raise analysis.NoCrossing('No curve group in %s crosses' % args.curves)
  analysis.write_csv(os.path.join(out, 'thresholds.csv'),
                     analysis.THRESHOLD_FIELDS, thresholds)
  for row in thresholds:
    print('%(variant)s eta=%(eta)s %(memory)s %(compilation)s: '
          'p_th = %(p_th).4g +/- %(uncertainty).2g' % row)


def footprint(args):
  rows, out = _curves_and_out(args)
  footprints = analysis.footprint_rows(rows)
  if not footprints:
    raise analysis.AboveThreshold('No curve group in %s can be projected' %
                                  args.curves)
  analysis.write_csv(os.path.join(out, 'footprints.csv'),
                     analysis.FOOTPRINT_FIELDS, footprints)
  for row in footprints:
    print('%(variant)s eta=%(eta)s p=%(p)g %(target)s: d=%(d)d, '
          '%(qubits)d qubits' % row)


def plot_command(args):
  rows, out = _curves_and_out(args)
  thresholds = []
  path = os.path.join(os.path.dirname(os.path.abspath(args.curves)),
                      'thresholds.csv')
  if os.path.exists(path):
    with open(path, newline='') as f:
      thresholds = list(csv.DictReader(f))
  for path in plot.plot_curves(rows, out, thresholds=thresholds):
    print(path)


def parser():
  common = argparse.ArgumentParser(add_help=False)
  common.add_argument('--debug', action='store_true', help='log at DEBUG')
  common.add_argument('--quiet', action='store_true', help='log warnings only')
  common.add_argument('--workers', type=int, help='worker processes')

  configured = argparse.ArgumentParser(add_help=False, parents=[common])
  configured.add_argument('--config', help='JSON experiment config file')
  configured.add_argument('--seed', type=int, help='RNG seed')

  top = argparse.ArgumentParser(description=__doc__.split('\n')[0])
  subs = top.add_subparsers(dest='command')
  subs.required = True

  sub = subs.add_parser('characterize', parents=[common],
                        help='characterize a gate over a bias grid')
  sub.add_argument('--gate', default='CNOT', choices=sorted(gatechar.gates))
  sub.add_argument('--eta', type=float, action='append',
                   help='system bias, repeatable. Defaults to 10^(k/4), '
                   'k = 0..16')
  sub.add_argument('--lambda', dest='lambda_biased_total', type=float,
                   default=gatechar.DEFAULT_LAMBDA)
  sub.add_argument('--table', help='write a residual bias table JSON here')
  sub.add_argument('--out', help='CSV output path')
  sub.set_defaults(func=characterize)

  sub = subs.add_parser('build', parents=[configured],
                        help='write a memory experiment circuit')
  sub.add_argument('--markers', action='store_true',
                   help="leave noise site markers unbound")
  sub.add_argument('--out', help='output file or directory')
  sub.set_defaults(func=build)

  sub = subs.add_parser('sample', parents=[configured],
                        help='sample detection events from a circuit')
  sub.add_argument('--circuit', required=True)
  sub.add_argument('--shots', help='number of shots, eg 100000 or 1M')
  sub.add_argument('--out', help='output file or directory')
  sub.set_defaults(func=sample)

  sub = subs.add_parser('decode', parents=[configured],
                        help='decode a shot dump and count logical errors')
  source = sub.add_mutually_exclusive_group(required=True)
  source.add_argument('--circuit', help='noise-bound circuit to extract the DEM from')
  source.add_argument('--dem', help='DEM file')
  sub.add_argument('--shots', required=True, help='shot dump file')
  sub.add_argument('--write-dem', help='also write the graphlike DEM here')
  sub.add_argument('--predictions',
                   help='write predicted and actual observable bits as CSV')
  sub.add_argument('--out', help='JSON summary output path')
  sub.set_defaults(func=decode)

  sub = subs.add_parser('run', parents=[configured],
                        help='run a config sweep end to end')
  sub.add_argument('--out', help='output directory')
  sub.set_defaults(func=run)

  for name, func, help in (
      ('threshold', threshold, 'estimate thresholds from curves.csv'),
      ('footprint', footprint, 'project footprints from curves.csv'),
      ('plot', plot_command, 'plot curves.csv as SVG')):
    sub = subs.add_parser(name, parents=[common], help=help)
    sub.add_argument('curves', help='curves.csv path')
    sub.add_argument('--out', help='output directory')
    sub.set_defaults(func=func)

  return top


def main(argv=None):
  args = parser().parse_args(argv)
  level = (logging.DEBUG if args.debug else
           logging.WARNING if args.quiet else logging.INFO)
  logging.basicConfig(format='%(levelname)s %(message)s')
  logging.getLogger().setLevel(level)

  try:
    args.func(args)
  except (ConfigError,) + CONFIG_ERRORS as e:
    logging.error('%s: %s', args.command, e)
    return EXIT_CONFIG
  except (ValueError, ArithmeticError) as e:
    context = getattr(args, 'config', None)
    logging.error('%s%s failed: %s', args.command,
                  ' with %s' % context if context else '', e)
    return EXIT_COMPUTE
  return EXIT_OK


if __name__ == '__main__':
  sys.exit(main())
