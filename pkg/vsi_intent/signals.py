# -*- coding: utf-8 -*-
from django.dispatch.dispatcher import Signal


# Sent at every training evaluation interval.
# Arguments: step, train_loss, metrics (MetricsReport of the validation set).
evaluation_logged = Signal()

# Sent when training keeps a new best-validation checkpoint.
# Arguments: step, f1.
checkpoint_selected = Signal()

# Sent by label propagation for every pool example it does not adopt.
# Arguments: example, reason.
example_dropped = Signal()
