# -*- coding: utf-8 -*-
"""
Validation of experiment config sections.

Each YAML section is bound to one form. Keys a section leaves out take the
field's initial value; keys the form does not know are rejected.
"""
from django import forms
from django.core.exceptions import ValidationError

from .conf import settings
from .model import MAX_MEMORY, MAX_MLP_LAYERS, VARIANTS
from .synthetic import SIGNAL_PHRASES


class _ListField(forms.Field):
    item_type = str

    def __init__(self, *args, **kwargs):
        self.length = kwargs.pop('length', None)
        self.min_length = kwargs.pop('min_length', 1)
        super().__init__(*args, **kwargs)

    def to_python(self, value):
        if value in self.empty_values:
            return []
        if isinstance(value, str):
            value = [item.strip() for item in value.split(',') if item.strip()]
        if not isinstance(value, (list, tuple)):
            raise ValidationError('Enter a list.', code='invalid')
        try:
            return [self.item_type(item) for item in value]
        except (TypeError, ValueError):
            raise ValidationError('Enter a list of %s values.' % self.item_type.__name__, code='invalid')

    def validate(self, value):
        super().validate(value)
        if self.length is not None and len(value) != self.length:
            raise ValidationError('Enter exactly %d values.' % self.length, code='length')
        if len(value) < self.min_length:
            raise ValidationError('Enter at least %d values.' % self.min_length, code='min_length')


class IntegerListField(_ListField):
    item_type = int


class FloatListField(_ListField):
    item_type = float


class StringListField(_ListField):
    item_type = str


class SectionForm(forms.Form):

    @classmethod
    def defaults(cls):
        values = {}
        for name, field in cls.base_fields.items():
            initial = field.initial() if callable(field.initial) else field.initial
            if initial is not None:
                values[name] = initial
        return values

    @classmethod
    def bind(cls, data):
        """
        Returns a bound form for ``data`` merged over the defaults, and the
        list of keys the form does not know.
        """
        data = dict(data or {})
        unknown = sorted(set(data) - set(cls.base_fields))
        merged = cls.defaults()
        merged.update(data)
        return cls(data=merged), unknown


class GeneratorForm(SectionForm):
    size = forms.IntegerField(min_value=4, initial=5000)
    text_decidable = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.5)
    dense_only = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.3)
    both = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.2)
    noise = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.0)
    positive_rate = forms.FloatField(min_value=0.0, max_value=1.0, initial=0.5)
    d_features = forms.IntegerField(min_value=17, initial=lambda: settings.VSI_INTENT_D_FEATURES)
    noise_features = forms.IntegerField(min_value=1, initial=4)
    locale = forms.ChoiceField(choices=[(name, name) for name in sorted(SIGNAL_PHRASES)], initial='us')
    seed = forms.IntegerField(min_value=0, initial=0)

    def clean(self):
        cleaned_data = super().clean()
        parts = [cleaned_data.get(name) for name in ('text_decidable', 'dense_only', 'both', 'noise')]
        if None not in parts and abs(sum(parts) - 1.0) > 1e-9:
            raise ValidationError('Subpopulation fractions must sum to 1.')
        return cleaned_data

    def clean_positive_rate(self):
        rate = self.cleaned_data['positive_rate']
        if not 0.0 < rate < 1.0:
            raise ValidationError('positive_rate must be in (0, 1).')
        return rate


class ModelConfigForm(SectionForm):
    variant = forms.ChoiceField(choices=[(name, name) for name in VARIANTS], initial='vsi')
    d_model = forms.IntegerField(min_value=1, initial=lambda: settings.VSI_INTENT_D_MODEL)
    n_layers = forms.IntegerField(min_value=1, initial=lambda: settings.VSI_INTENT_N_LAYERS)
    n_heads = forms.IntegerField(min_value=1, initial=lambda: settings.VSI_INTENT_N_HEADS)
    d_ff = forms.IntegerField(min_value=1, initial=lambda: settings.VSI_INTENT_D_FF)
    seq_len = forms.IntegerField(min_value=1, initial=lambda: settings.VSI_INTENT_SEQ_LEN)
    n_memory = forms.IntegerField(min_value=0, max_value=MAX_MEMORY, initial=lambda: settings.VSI_INTENT_N_MEMORY)
    n_mlp_layers = forms.IntegerField(
        min_value=1, max_value=MAX_MLP_LAYERS, initial=lambda: settings.VSI_INTENT_N_MLP_LAYERS)
    pool_memory = forms.BooleanField(required=False, initial=True)
    share_sequence_budget = forms.BooleanField(required=False, initial=False)
    dropout = forms.FloatField(min_value=0.0, max_value=0.99, initial=lambda: settings.VSI_INTENT_DROPOUT)

    def clean(self):
        cleaned_data = super().clean()
        d_model, n_heads = cleaned_data.get('d_model'), cleaned_data.get('n_heads')
        if d_model and n_heads and d_model % n_heads:
            raise ValidationError('d_model must be divisible by n_heads.')
        return cleaned_data


class TrainForm(SectionForm):
    learning_rate = forms.FloatField(min_value=0.0, initial=lambda: settings.VSI_INTENT_LEARNING_RATE)
    batch_size = forms.IntegerField(min_value=1, initial=lambda: settings.VSI_INTENT_BATCH_SIZE)
    max_steps = forms.IntegerField(min_value=1, initial=lambda: settings.VSI_INTENT_MAX_STEPS)
    eval_interval = forms.IntegerField(min_value=1, initial=lambda: settings.VSI_INTENT_EVAL_INTERVAL)
    optimizer = forms.ChoiceField(choices=(), initial=lambda: settings.VSI_INTENT_OPTIMIZER)
    clip_norm = forms.FloatField(min_value=0.0, required=False, initial=lambda: settings.VSI_INTENT_CLIP_NORM)

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.fields['optimizer'].choices = [(name, name) for name in sorted(settings.VSI_INTENT_OPTIMIZERS)]

    def clean_clip_norm(self):
        value = self.cleaned_data.get('clip_norm')
        return value or None


class ExperimentForm(SectionForm):
    dataset = forms.CharField(required=False)
    output_dir = forms.CharField(initial='runs')
    seeds = IntegerListField(initial=[0, 1, 2, 3, 4])
    split_fractions = FloatListField(length=3, initial=lambda: list(settings.VSI_INTENT_SPLIT_FRACTIONS))
    vocab_size = forms.IntegerField(min_value=2, initial=lambda: settings.VSI_INTENT_VOCAB_SIZE)
    tau = forms.FloatField(min_value=0.0, max_value=1.0, initial=lambda: settings.VSI_INTENT_PROPAGATION_TAU)

    def clean_split_fractions(self):
        fractions = self.cleaned_data['split_fractions']
        if any(value <= 0 for value in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
            raise ValidationError('Split fractions must be positive and sum to 1.')
        return fractions

    def clean_tau(self):
        tau = self.cleaned_data['tau']
        if tau <= 0.0:
            raise ValidationError('tau must be in (0, 1].')
        return tau


class AblationForm(SectionForm):
    n_memory_values = IntegerListField(initial=[0, 1, 2, 3, 4])
    depths = IntegerListField(initial=[1, 2, 3])
    depth_variants = StringListField(initial=['late_fusion', 'vsi'])
    sizes = StringListField(initial=['tiny', 'small'])
    size_variants = StringListField(initial=['query_only', 'vsi'])
    compare_variants = StringListField(initial=['query_only', 'late_fusion', 'vsi'])
    adaboost_estimators = IntegerListField(initial=[20, 50], min_length=0, required=False)

    def clean_n_memory_values(self):
        values = self.cleaned_data['n_memory_values']
        if any(not 0 <= value <= MAX_MEMORY for value in values):
            raise ValidationError('n_memory values must be in [0, %d].' % MAX_MEMORY)
        return values

    def clean_depths(self):
        values = self.cleaned_data['depths']
        if any(not 1 <= value <= MAX_MLP_LAYERS for value in values):
            raise ValidationError('MLP depths must be in [1, %d].' % MAX_MLP_LAYERS)
        return values

    def clean_sizes(self):
        from .ablation import SIZE_PRESETS

        values = self.cleaned_data['sizes']
        unknown = [value for value in values if value not in SIZE_PRESETS]
        if unknown:
            raise ValidationError('Unknown size presets: %s.' % ', '.join(unknown))
        return values

    def _clean_variants(self, name):
        values = self.cleaned_data[name]
        unknown = [value for value in values if value not in VARIANTS]
        if unknown:
            raise ValidationError('Unknown variants: %s.' % ', '.join(unknown))
        return values

    def clean_depth_variants(self):
        return self._clean_variants('depth_variants')

    def clean_size_variants(self):
        return self._clean_variants('size_variants')

    def clean_compare_variants(self):
        return self._clean_variants('compare_variants')

    def clean_adaboost_estimators(self):
        values = self.cleaned_data['adaboost_estimators']
        if any(value < 1 for value in values):
            raise ValidationError('AdaBoost estimator counts must be positive.')
        return values


SECTION_FORMS = {
    'generator': GeneratorForm,
    'model': ModelConfigForm,
    'train': TrainForm,
    'experiment': ExperimentForm,
    'ablation': AblationForm,
}
