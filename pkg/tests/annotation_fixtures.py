"""Annotation-response fixtures: 30 well-formed responses (10 per category)
and 5 malformed ones, with hand-assigned expected scores."""

GOOD_RESPONSES = [
    # (category, response_text, expected_score)
    ("edu", "O trecho apresenta conteúdo escolar básico com alguns anúncios.\nPontuação educacional: 1", 1),
    ("edu", "Material didático coerente, introduz conceitos do currículo.\nPontuação educacional: 3", 3),
    ("edu", "Justificativa: texto excepcional, raciocínio detalhado e completo.\nPontuação educacional: 5", 5),
    ("edu", "Pouca relevância educacional, apenas listagem de produtos.\nPontuação educacional: 0", 0),
    ("edu", "Mistura conteúdo educacional com propaganda.\nPontuação educacional: 2", 2),
    ("edu", "Semelhante a um capítulo de livro didático, com exercícios.\nPontuação educacional: 4", 4),
    ("edu", "Primeira avaliação: Pontuação educacional: 2\nRevisando: Pontuação educacional: 3", 3),
    ("edu", "Pontuação educacional:5", 5),
    ("edu", "Pontuação educacional : 1", 1),
    ("edu", "Nota alta demais na escala, deve saturar. Pontuação educacional: 9", 5),
    ("stem", "Menciona conceitos de física de forma superficial.\nPontuação STEM: 1", 1),
    ("stem", "Discussão introdutória de programação com exemplos.\nPontuação STEM: 2", 2),
    ("stem", "Informações corretas de química, sem muito detalhe.\nPontuação STEM: 3", 3),
    ("stem", "Explicação detalhada de algoritmos com aplicações reais.\nPontuação STEM: 4", 4),
    ("stem", "Referência técnica profunda em engenharia.\nPontuação STEM: 5", 5),
    ("stem", "Nenhuma relação com STEM, página de receitas.\nPontuação STEM: 0", 0),
    ("stem", "Pontuação STEM: 1\nNa verdade, reavaliando: Pontuação STEM: 0", 0),
    ("stem", "Pontuação STEM:4", 4),
    ("stem", "Justificativa longa sobre matemática aplicada.\n\nPontuação STEM: 3", 3),
    ("stem", "Escala estourada para baixo. Pontuação STEM: -1", 0),
    ("toxic", "Linguagem imprópria leve.\nPontuação ofensiva: 1", 1),
    ("toxic", "Humor ácido, sem material explícito.\nPontuação ofensiva: 2", 2),
    ("toxic", "Piadas de mau gosto, estereótipos.\nPontuação ofensiva: 3", 3),
    ("toxic", "Predominantemente ofensivo, sem material explícito.\nPontuação ofensiva: 4", 4),
    ("toxic", "Pontuação ofensiva: 5", 5),
    ("toxic", "Conteúdo totalmente inócuo.\nPontuação ofensiva: 0", 0),
    ("toxic", "Pontuação ofensiva: 0. Conclusão: Pontuação ofensiva: 2", 2),
    ("toxic", "Pontuação ofensiva:3", 3),
    ("toxic", "Justificativa: retórica dura, mas não extremista.\nPontuação ofensiva : 2", 2),
    ("toxic", "Pontuação acima do teto. Pontuação ofensiva: 7", 5),
]

MALFORMED_RESPONSES = [
    ("edu", "sem pontuação aqui"),
    ("edu", "Pontuação STEM: 3"),  # wrong category marker
    ("stem", "Pontuação STEM: três"),  # non-integer
    ("toxic", "Pontuação ofensiva ausente"),
    ("toxic", ""),
]
