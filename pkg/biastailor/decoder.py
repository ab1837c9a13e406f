"""Minimum-weight perfect matching decoder over graphlike detector error models.

Decoding a syndrome:

1. Dijkstra from each flagged detector over the matching graph, whose edges
   weigh ln((1-q)/q), gives pairwise and boundary distances.
2. A derived graph gets one node per flagged detector plus one virtual
   boundary copy each. Flagged pairs are joined when pairing them beats
   sending both to the boundary, each detector is joined to its own copy by
   its boundary distance, and copies are joined to each other at cost 0.
3. Clusters of flagged detectors that can't pair with each other are
   independent, so each cluster gets its own exact blossom matching
   (networkx max_weight_matching on inverted integer weights).
4. The predicted observable flips are the XOR of the observable masks along
   every matched path.

Equal-weight ties are broken deterministically: nodes and edges are added to
the matcher in ascending detector order.
"""
import collections
from concurrent import futures
import logging
import math
import time

import humanfriendly
import networkx as nx
import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from . import dem as dem_mod

# integer resolution of matching weights
WEIGHT_SCALE = 2 ** 20
MIN_WEIGHT = 1e-9


class NotGraphlike(ValueError):
  """Raised when building a matching graph from a non-graphlike DEM."""


class DecodingInfeasible(ValueError):
  """Raised when flagged detectors can't be paired up or sent to a boundary."""


Edge = collections.namedtuple('Edge', ['weight', 'probability', 'observables'])
MatchResult = collections.namedtuple('MatchResult', [
  'pairs', 'weight', 'observables'])


def edge_weight(q):
  if q >= .5:
    logging.warning('Mechanism probability %g >= 0.5; clamping its weight', q)
    return MIN_WEIGHT
  return max(math.log((1 - q) / q), MIN_WEIGHT)


class MatchingGraph(object):
  """Weighted graph over detectors plus one boundary node.

  Attributes:
    num_detectors: int
    num_observables: int
    boundary: int, the boundary node's index, equal to num_detectors
    edges: dict, (u, v) with u < v => :class:`Edge`. observables is an int
      bit mask.
  """

  def __init__(self, num_detectors, num_observables, edges):
    self.num_detectors = num_detectors
    self.num_observables = num_observables
    self.boundary = num_detectors
    self.edges = dict(edges)

    n = num_detectors + 1
    if self.edges:
      us, vs = zip(*self.edges)
      weights = [e.weight for e in self.edges.values()]
      self.csgraph = scipy.sparse.csr_matrix(
        (weights + weights, (us + vs, vs + us)), shape=(n, n))
    else:
      self.csgraph = scipy.sparse.csr_matrix((n, n))

  def scaled(self, factor):
    """Returns a copy with every weight multiplied by factor."""
    return MatchingGraph(self.num_detectors, self.num_observables, {
      key: edge._replace(weight=edge.weight * factor)
      for key, edge in self.edges.items()})

  def path_observables(self, predecessors, source, target):
    """XORs observable masks along a shortest path tree branch."""
    mask = 0
    node = target
    while node != source:
      prev = predecessors[node]
      if prev < 0:
        raise DecodingInfeasible('No path from %d to %d' % (source, target))
      mask ^= self.edges[(min(node, prev), max(node, prev))].observables
      node = prev
    return mask

  def mask_to_bits(self, mask):
    return np.array([(mask >> i) & 1 for i in range(self.num_observables)],
                    dtype=np.uint8)


def build_matching_graph(dem):
  """Builds a :class:`MatchingGraph` from a graphlike DEM.

  Single-detector mechanisms become boundary edges. Parallel edges collapse
  into one with their XOR-merged probability and the observable mask of the
  more probable edge. Mechanisms that flip no detectors can't be matched and
  are skipped.

  Raises:
    :class:`NotGraphlike`
  """
  if not dem.graphlike or not dem_mod.is_graphlike(dem.mechanisms):
    raise NotGraphlike('Decompose the DEM with decompose_graphlike first')

  probs = {}
  best = {}
  for m in dem.mechanisms:
    if not m.detectors:
      continue
    u = m.detectors[0]
    v = m.detectors[1] if len(m.detectors) == 2 else dem.num_detectors
    mask = sum(1 << l for l in m.observables)
    key = (u, v)
    if key in probs:
      probs[key] = dem_mod.xor_probability(probs[key], m.probability)
      if m.probability > best[key][0]:
        best[key] = (m.probability, mask)
    else:
      probs[key] = m.probability
      best[key] = (m.probability, mask)

  edges = {key: Edge(edge_weight(q), q, best[key][1])
           for key, q in probs.items()}
  return MatchingGraph(dem.num_detectors, dem.num_observables, edges)


def _clusters(k, linked):
  """Groups 0..k-1 into connected components of the linked pairs."""
  graph = nx.Graph()
  graph.add_nodes_from(range(k))
  graph.add_edges_from(linked)
  return sorted(sorted(c) for c in nx.connected_components(graph))


def match(graph, detection_events):
  """Finds the minimum-weight matching of the flagged detectors.

  Args:
    graph: :class:`MatchingGraph`
    detection_events: sequence of num_detectors bits

  Returns:
    :class:`MatchResult`. pairs is a list of (detector, detector) and
    (detector, graph.boundary) tuples, weight is the total path weight, and
    observables is the predicted observable bit mask.

  Raises:
    :class:`DecodingInfeasible`, ValueError
  """
  events = np.asarray(detection_events)
  if len(events) != graph.num_detectors:
    raise ValueError('Expected %d detection events, got %d' %
                     (graph.num_detectors, len(events)))
  flagged = [int(d) for d in np.flatnonzero(events)]
  if not flagged:
    return MatchResult([], 0.0, 0)

  dist, pred = scipy.sparse.csgraph.dijkstra(
    graph.csgraph, directed=False, indices=flagged, return_predecessors=True)
  k = len(flagged)
  to_boundary = dist[:, graph.boundary]

  linked = []
  for i in range(k):
    for j in range(i + 1, k):
      d_ij = dist[i, flagged[j]]
      if math.isinf(d_ij):
        continue
      if (math.isinf(to_boundary[i]) or math.isinf(to_boundary[j]) or
          d_ij < to_boundary[i] + to_boundary[j]):
        linked.append((i, j))

  finite = [w for w in dist[:, flagged + [graph.boundary]].ravel()
            if not math.isinf(w)]
  ceiling = int(round(max(finite + [0]) * WEIGHT_SCALE)) + 1

  def inverted(w):
    return ceiling - int(round(w * WEIGHT_SCALE))

  pairs = []
  weight = 0.0
  observables = 0
  links = collections.defaultdict(list)
  for i, j in linked:
    links[i].append(j)

  for cluster in _clusters(k, linked):
    matcher = nx.Graph()
    # node i is flagged detector i, node -(i + 1) its boundary copy
    for i in cluster:
      matcher.add_node(i)
    for i in cluster:
      for j in links[i]:
        matcher.add_edge(i, j, weight=inverted(dist[i, flagged[j]]))
      if not math.isinf(to_boundary[i]):
        matcher.add_edge(i, -(i + 1), weight=inverted(to_boundary[i]))
    copies = [i for i in cluster if not math.isinf(to_boundary[i])]
    for a, i in enumerate(copies):
      for j in copies[a + 1:]:
        matcher.add_edge(-(i + 1), -(j + 1), weight=ceiling)

    matching = nx.max_weight_matching(matcher, maxcardinality=True)
    matched = set()
    for a, b in sorted((min(a, b), max(a, b)) for a, b in matching):
      matched.update((a, b))
      if a < 0 and b < 0:
        continue
      i, j = (b, a) if a < 0 else (a, b)
      if j < 0:
        pairs.append((flagged[i], graph.boundary))
        weight += to_boundary[i]
        observables ^= graph.path_observables(pred[i], flagged[i],
                                              graph.boundary)
      else:
        pairs.append((flagged[i], flagged[j]))
        weight += dist[i, flagged[j]]
        observables ^= graph.path_observables(pred[i], flagged[i], flagged[j])

    if any(i not in matched for i in cluster):
      raise DecodingInfeasible(
        'Detectors %s can neither pair up nor reach a boundary' %
        [flagged[i] for i in cluster if i not in matched])

  return MatchResult(sorted(pairs), weight, observables)


def decode(graph, detection_events):
  """Returns the predicted observable flips as a numpy uint8 bit array."""
  return graph.mask_to_bits(match(graph, detection_events).observables)


def _decode_rows(args):
  graph, rows, num_detectors = args
  out = np.zeros((len(rows), graph.num_observables), dtype=np.uint8)
  for s, row in enumerate(rows):
    events = np.unpackbits(row, bitorder='little', count=num_detectors)
    if events.any():
      out[s] = decode(graph, events)
  return out


def decode_batch(graph, batch, workers=1):
  """Decodes every shot of a :class:`sampler.ShotBatch`.

  Returns:
    numpy uint8 array, shots x num_observables, of predicted observable flips
  """
  if batch.num_detectors != graph.num_detectors:
    raise ValueError('Batch has %d detectors, graph has %d' %
                     (batch.num_detectors, graph.num_detectors))
  start = time.time()

  if workers <= 1:
    predictions = _decode_rows((graph, batch.detector_bits, batch.num_detectors))
  else:
    slices = np.array_split(batch.detector_bits, workers)
    with futures.ProcessPoolExecutor(max_workers=workers) as executor:
      predictions = np.concatenate(list(executor.map(
        _decode_rows, [(graph, rows, batch.num_detectors) for rows in slices])))

  logging.debug('Decoded %s shots in %s',
                humanfriendly.format_number(batch.shots),
                humanfriendly.format_timespan(time.time() - start))
  return predictions


def count_logical_errors(predictions, batch):
  """Counts shots where the prediction differs from the actual observable flips."""
  return int(np.any(predictions != batch.observables(), axis=1).sum())
