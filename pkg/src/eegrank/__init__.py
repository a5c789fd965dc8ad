"""eegrank: synthetic P300 RSVP sessions, EEG epoch classification, and
relevance-feedback image ranking, end to end.

Modules:
  dataio     shared domain types and on-disk formats
  planner    oddball RSVP plan construction and timelines
  synth      synthetic EEG session generator with P300-like responses
  pipeline   re-reference / decimate / band-pass / epoch / featurize chain
  svm        from-scratch linear SVM (dual coordinate descent)
  metrics    ROC/AUC, average precision, Welch's t-test
  retrieval  score- and annotation-based rankings, relevance feedback
  fixtures   synthetic image sets and clustered feature matrices
  experiments  multi-session harnesses (cross-query eval, compare grid)
  report     CSV/JSON bundles and matplotlib figures
  cli        command-line entry points
  service    HTTP API backing the annotation UI
"""

__version__ = "0.1.0"
