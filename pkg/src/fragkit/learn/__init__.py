from .bayes import LDAModel, NaiveBayesModel, train_lda, train_naive_bayes
from .knn import KNNEnsembleModel, train_knn_ensemble
from .machine import (
    MODEL_KINDS,
    ConfusionMatrix,
    DecisionMachine,
    evaluate,
    load_machine,
    row_percent,
    save_machine,
)
from .nnet import Net, NeuralNetModel, train_neural_net
from .pipeline import (
    CVReport,
    TestReport,
    TrainReport,
    cross_validate,
    cv_folds,
    fit_model,
    load_results,
    model_params,
    save_results,
    test_machine,
    train_machine,
)
from .svm import GramSpec, SVMModel, train_svm_ova
from .tree import ForestModel, Tree, TreeModel, train_decision_tree, train_random_forest
