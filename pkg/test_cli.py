"""Unit tests for cli.py.
"""
import csv
import os
import tempfile

from oauth_dropins.webutil import testutil
from oauth_dropins.webutil.util import json_dumps, json_loads

from biastailor import (
  analysis,
  circuit,
  decoder,
  dem,
  gatechar,
  noisemodel,
  sampler,
)
from biastailor.noisemodel import NoiseConfigError, noise_spec

import cli

PROBS = [.99] + [.01 / 15] * 15


def read_rows(path):
  with open(path, newline='') as f:
    return list(csv.DictReader(f))


class CliTest(testutil.TestCase):

  def setUp(self):
    super(CliTest, self).setUp()
    self.dir = tempfile.TemporaryDirectory()
    self.addCleanup(self.dir.cleanup)

  def path(self, name):
    return os.path.join(self.dir.name, name)

  def write_config(self, **fields):
    path = self.path('config.json')
    with open(path, 'w') as f:
      f.write(json_dumps(fields))
    return path

  def test_defaults(self):
    config = cli.load_config(environ={})
    self.assertEqual(3, config['distance'])
    self.assertEqual('H', config['memory'])
    self.assertEqual(noisemodel.SD, config['eta'])
    self.assertEqual(20000000, config['shots_ceiling'])
    self.assertEqual(100000, config['errors_ceiling'])
    self.assertEqual([(3, .001, noisemodel.SD, 'H')], cli.sweep(config))

  def test_precedence(self):
    path = self.write_config(distance=[3, 5], p=.002, seed=1,
                             shots_ceiling='1M', errors_ceiling='10k')
    config = cli.load_config(path, environ={
      'BIASTAILOR_P': '[0.003, 0.004]',
      'BIASTAILOR_ETA': 'sd',
      'BIASTAILOR_SEED': '2',
      'OTHER_P': '0.5',
    }, seed=7, workers=None)

    self.assertEqual([3, 5], config['distance'])
    self.assertEqual([.003, .004], config['p'])
    self.assertEqual('sd', config['eta'])
    self.assertEqual(7, config['seed'])
    self.assertEqual(1, config['workers'])
    self.assertEqual(1000000, config['shots_ceiling'])
    self.assertEqual(10000, config['errors_ceiling'])
    self.assertEqual([(3, .003, 'sd', 'H'), (3, .004, 'sd', 'H'),
                      (5, .003, 'sd', 'H'), (5, .004, 'sd', 'H')],
                     cli.sweep(config))

  def test_bad_configs(self):
    for fields in ({'distanse': 3}, {'distance': 4}, {'distance': [3, 1]},
                   {'memory': 'D'}, {'compilation': 'cy'}, {'rounds': 0},
                   {'shots_ceiling': 'lots'}, {'workers': 0},
                   {'seed': -1}, {'p': 'high'}):
      with self.assertRaises(cli.ConfigError, msg=fields):
        cli.load_config(self.write_config(**fields), environ={})

    for fields in {'p': -.1}, {'eta': 0}, {'variant': 'hbd'}:
      with self.assertRaises(NoiseConfigError, msg=fields):
        cli.load_config(self.write_config(**fields), environ={})

    # the residual variant gets eta_cnot from the table later
    cli.load_config(self.write_config(variant='hbd-residual-cnot', eta=10),
                    environ={})

  def test_spec_for_residual(self):
    self.mox.StubOutWithMock(noisemodel, 'residual_bias_lookup')
    noisemodel.residual_bias_lookup(10, path='t.json').AndReturn(4.5)
    self.mox.ReplayAll()

    config = cli.load_config(environ={}, variant='hbd-residual-cnot', eta=10,
                             residual_bias_table='t.json')
    self.assertEqual(noise_spec(.001, 10, 'hbd-residual-cnot', eta_cnot=4.5),
                     cli.spec_for(config, .001, 10))
    self.assertEqual(noise_spec(.001, 'sd', 'hbd-residual-cnot'),
                     cli.spec_for(config, .001, 'sd'))

  def test_exit_codes(self):
    self.assertEqual(cli.EXIT_CONFIG,
                     cli.main(['build', '--config', self.path('missing.json')]))

    with open(self.path('bad.json'), 'w') as f:
      f.write('{distance: 3')
    self.assertEqual(cli.EXIT_CONFIG,
                     cli.main(['build', '--config', self.path('bad.json')]))
    self.assertEqual(cli.EXIT_CONFIG, cli.main([
      'build', '--config', self.write_config(distance=[3, 5])]))

    with open(self.path('circuit.txt'), 'w') as f:
      f.write('FROB 0\n')
    self.assertEqual(cli.EXIT_CONFIG, cli.main([
      'sample', '--circuit', self.path('circuit.txt'), '--shots', '10',
      '--out', self.path('shots.b8')]))

  def test_build_sample_decode_replay(self):
    config = self.write_config(distance=3, rounds=3, p=.005, eta=10, seed=4)
    circ, shots = self.path('circuit.txt'), self.path('shots.b8')
    dem_path = self.path('dem.txt')

    self.assertEqual(0, cli.main(['build', '--config', config, '--out', circ]))
    self.assertEqual(0, cli.main(['sample', '--config', config, '--circuit',
                                  circ, '--shots', '3000', '--out', shots]))
    self.assertEqual(0, cli.main([
      'decode', '--circuit', circ, '--shots', shots, '--write-dem', dem_path,
      '--out', self.path('one.json')]))
    self.assertEqual(0, cli.main([
      'decode', '--dem', dem_path, '--shots', shots, '--out',
      self.path('two.json'), '--predictions', self.path('predictions.csv')]))

    summaries = []
    for name in 'one.json', 'two.json':
      with open(self.path(name)) as f:
        summaries.append(json_loads(f.read()))
    self.assertEqual(summaries[0], summaries[1])

    with open(circ) as f:
      program = circuit.parse(f.read())
    self.assertEqual(
      program, circuit.attach_noise(circuit.build_xzzx_memory(3, rounds=3),
                                    noise_spec(.005, 10)))
    batch = sampler.load(shots)
    self.assertEqual(3000, batch.shots)
    graph = decoder.build_matching_graph(
      dem.decompose_graphlike(dem.extract_dem(program)))
    errors = decoder.count_logical_errors(
      decoder.decode_batch(graph, batch), batch)
    self.assert_equals({'shots': 3000, 'errors': errors,
                        'p_total': errors / 3000}, summaries[0])

    rows = read_rows(self.path('predictions.csv'))
    self.assertEqual(3000, len(rows))
    self.assertEqual(errors, sum(1 for row in rows
                                 if row['predicted'] != row['actual']))

  def test_build_markers(self):
    circ = self.path('markers.txt')
    self.assertEqual(0, cli.main(['build', '--markers', '--out', circ]))
    with open(circ) as f:
      text = f.read()
    self.assertIn(circuit.NOISE_SITE, text)
    self.assertNotIn(circuit.PAULI_CHANNEL_2, text)

  def test_run(self):
    config = self.write_config(distance=[3, 5], p=[.005, .01], eta=10,
                               shots_ceiling=10000, out=self.path('out'))
    errors = {(3, .005): 100, (3, .01): 400, (5, .005): 50, (5, .01): 800}

    self.mox.StubOutWithMock(analysis, 'simulate')
    for (d, p), k in sorted(errors.items()):
      spec = noise_spec(p, 10)
      analysis.simulate(
        d, spec, memory='H', rounds=None, compilation='cnot-cz',
        shots_ceiling=10000, errors_ceiling=100000, seed=0,
        chunk_shots=sampler.CHUNK_SHOTS, workers=1,
      ).AndReturn(analysis.result(d, spec, 'H', 3 * d, 'cnot-cz', 10000, k))
    self.mox.ReplayAll()

    self.assertEqual(0, cli.main(['run', '--config', config]))

    out = self.path('out')
    rows = analysis.read_curves(os.path.join(out, 'curves.csv'))
    self.assertEqual([(3, .005, 100), (3, .01, 400), (5, .005, 50),
                      (5, .01, 800)],
                     [(r['d'], r['p'], r['errors']) for r in rows])
    with open(os.path.join(out, 'results.json')) as f:
      results = json_loads(f.read())
    self.assertEqual(4, len(results['results']))
    self.assertNotIn('rounds', results['config'])

    self.assertTrue(os.path.exists(os.path.join(out, 'thresholds.csv')))
    self.assertFalse(os.path.exists(os.path.join(out, 'footprints.csv')))
    self.assertTrue(os.path.exists(
      os.path.join(out, 'threshold_hbd-bp-cz_10.0_H_cnot-cz.svg')))

  def curves_csv(self, distances):
    rows = []
    for d in distances:
      for p in .004, .008, .016:
        res = analysis.result(d, noise_spec(p, 10), 'H', 3, 'cnot-cz',
                              10 ** 6, int(10 ** 5 * (p / .01) ** ((d + 1) / 2)))
        rows.append(analysis.curve_row(res))
    path = self.path('curves.csv')
    analysis.write_csv(path, analysis.CURVE_FIELDS, rows)
    return path

  def test_threshold_and_plot(self):
    path = self.curves_csv((3, 5, 7))
    self.assertEqual(0, cli.main(['threshold', path]))
    [row] = read_rows(self.path('thresholds.csv'))
    self.assertAlmostEqual(.01, float(row['p_th']), delta=.002)

    self.assertEqual(0, cli.main(['plot', path, '--out', self.path('svg')]))
    self.assertEqual(['threshold_hbd-bp-cz_10.0_H_cnot-cz.svg'],
                     os.listdir(self.path('svg')))

  def test_footprint_needs_distances(self):
    path = self.curves_csv((3, 5))
    self.assertEqual(cli.EXIT_COMPUTE, cli.main(['footprint', path]))

  def test_characterize(self):
    self.mox.StubOutWithMock(gatechar, 'characterize_sweep')
    gatechar.characterize_sweep(
      'CNOT', [1., 10.], lambda_biased_total=gatechar.DEFAULT_LAMBDA, workers=1,
    ).AndReturn([
      gatechar.GateNoiseProfile('CNOT', 1., 2, PROBS, 1.2, .01, 1e-6),
      gatechar.GateNoiseProfile('CNOT', 10., 2, PROBS, 5.5, .01, 1e-6),
    ])
    self.mox.ReplayAll()

    table = self.path('table.json')
    self.assertEqual(0, cli.main([
      'characterize', '--eta', '1', '--eta', '10', '--table', table,
      '--out', self.path('cnot.csv')]))
    self.assertEqual(5.5, noisemodel.ResidualBiasTable.load(table)(10.))
    rows = read_rows(self.path('cnot.csv'))
    self.assertEqual(['1.0', '10.0'], [row['eta_sys'] for row in rows])
    self.assertEqual(21, len(rows[0]))
    self.assertEqual('0.99', rows[0]['p_identity'])
    self.assertEqual('5.5', rows[1]['eta_residual'])

  def test_characterize_table_needs_cnot(self):
    self.mox.StubOutWithMock(gatechar, 'characterize_sweep')
    gatechar.characterize_sweep(
      'CZ', [1.], lambda_biased_total=gatechar.DEFAULT_LAMBDA, workers=1,
    ).AndReturn([gatechar.GateNoiseProfile('CZ', 1., 2, PROBS, 1., .01, 0)])
    self.mox.ReplayAll()

    self.assertEqual(cli.EXIT_CONFIG, cli.main([
      'characterize', '--gate', 'CZ', '--eta', '1',
      '--table', self.path('t.json')]))
