"""Hand-built fixtures with hand-assigned expected values."""

# Function-labeling document. Statement signatures: penalty, crime.
# Argument signatures: justice, prisons, deterrence. Each line notes the
# word count, signature hits and the clause that decides the label.
LABEL_STATEMENT_SIGS = ("penalty", "crime")
LABEL_ARGUMENT_SIGS = ("justice", "prisons", "deterrence")
LABEL_DOC = [
    ("Many people have strong views about this topic in our country.", "Filler"),  # 11w, 0 hits
    ("The penalty for crime should match the harm done to victims.", "Content"),  # 11w, 2 hits
    ("Penalty crime justice.", "Filler"),  # 3w: length gate beats 3 hits
    ("However, the penalty has failed to reduce violence in most large cities.", "Content"),  # marker + 1 hit
    ("The penalty has failed to reduce violence in most large cities.", "Filler"),  # 1 hit, no marker
    ("In fact, crime rates rose sharply in several states over the last decade.", "Content"),  # 2-word marker
    ("Crime rates rose sharply in several states, in fact, over the decade.", "Filler"),  # marker not leading
    ("Why should the penalty for crime be so much harsher than elsewhere?", "Filler"),  # question, 12w < 20
    ("Why should the penalty for crime in this country be so much harsher than it is in nearly every other "
     "developed nation today?", "Content"),  # question, 23w, 2 hits
    ("Justice requires that prisons treat every inmate with basic dignity.", "Content"),  # exactly 10w
    ("Justice requires that prisons treat inmates with basic dignity.", "Filler"),  # 9w
    ("Lawmakers debated the new sentencing rules for many long hours yesterday.", "Content"),  # back-pass from next
    ("They argued that the penalty does little to prevent crime in practice.", "Content"),  # pronoun 1st word
    ("Reporters covered the long debate in great detail for their readers.", "Content"),  # back-pass from next
    ("Even so, it showed that prisons rarely deliver justice to anyone involved.", "Content"),  # pronoun 3rd word
    ("Committees met twice during the spring session to review several proposals.", "Filler"),  # next: 4th word
    ("According to experts, they found that crime and prisons are closely linked.", "Content"),  # pronoun 4th word
    ("This seems obvious.", "Filler"),  # short
    ("Weather was pleasant during most of the long summer months this year.", "Filler"),  # next is Filler
    ("It rained only twice.", "Filler"),  # pronoun but Filler: no back-pass
    ("Officials collected new data on prisons across the region last year.", "Content"),  # cascade, 2 steps back
    ("These numbers were published in a short report.", "Content"),  # cascade, 1 step back
    ("They show that crime fell while the penalty stayed exactly the same.", "Content"),  # 2 hits + pronoun
    ("Therefore, we should think carefully before changing any of these important rules.", "Filler"),  # marker, 0 hits
    ("As a result, many prisons now operate far beyond their intended capacity.", "Content"),  # 3-word marker
    ("Crime, crime, and more crime is all that the news ever covers.", "Filler"),  # repeats count once
    ("JUSTICE and DETERRENCE matter more than anything else in this long debate.", "Content"),  # case-folded
    ("However, is it not true that prisons in many parts of the world fail to rehabilitate the people who are "
     "sent there?", "Content"),  # question, 22w, marker + 1 hit
    ("Thus, why do prisons cost so much money each and every year?", "Filler"),  # question, 12w
    ("That is all.", "Filler"),
]

# Stance cases: (words, targets, expected Q) with lexicon STANCE_LEX; Q by hand.
STANCE_LEX = {"good": 1, "bad": -1, "great": 1, "awful": -1}
STANCE_CASES = [
    (["bad", "policy"], [["policy"]], -1.0),
    (["policy", "bad"], [["policy"]], -1.0),
    (["good", "the", "policy"], [["policy"]], 1 / 32),
    (["policy", "is", "very", "good"], [["policy"]], 1 / 243),
    (["the", "policy", "works"], [["policy"]], 0.0),
    (["good", "plan"], [["policy"]], 0.0),
    (["good", "tax", "bad", "law"], [["tax"], ["law"]], 1 - 1 + 1 / 243 - 1),
    (["awful", "death", "penalty"], [["death", "penalty"]], -1.0),
    (["good", "policy"], [["good", "policy"]], 1.0),
    (["policy", "good", "policy"], [["policy"]], 2.0),
    (["good", "good", "policy"], [["policy"]], 1 + 1 / 32),
    (["bad", "x", "y", "z", "policy"], [["policy"]], -1 / 1024),
    (["great", "a", "b", "c", "d", "policy"], [["policy"]], 1 / 3125),
    (["bad", "tax", "policy"], [["policy"], ["tax", "policy"]], -1 / 32 - 1),
    (["good", "policy", "awful"], [["policy"]], 0.0),
    ([], [["policy"]], 0.0),
    (["policy"], [["tax", "policy"]], 0.0),
    (["policy", "policy", "policy", "good"], [["policy"]], 1 / 243 + 1 / 32 + 1),
    (["great", "tax", "awful", "awful"], [["tax"]], 1 - 1 - 1 / 32),
    (["good", "policy"], [], 0.0),
]

# Weighted n-gram coverage: (passage words, argument words, expected) by hand.
# 0.5 * 4-gram + 0.3 * trigram + 0.2 * bigram coverage of the argument's
# content-word n-grams.
NGRAM_CASES = [
    ("alpha beta gamma delta", "alpha beta gamma delta epsilon", 0.5 * 1 / 2 + 0.3 * 2 / 3 + 0.2 * 3 / 4),
    ("alpha the beta of gamma", "alpha beta gamma delta", 0.5 * 0 + 0.3 * 1 / 2 + 0.2 * 2 / 3),
    ("zeta alpha beta", "alpha beta", 0.2 * 1),
    ("alpha beta alpha", "alpha beta alpha beta alpha", 0.5 * 0 + 0.3 * 1 / 2 + 0.2 * 2 / 2),
    ("alpha beta gamma delta epsilon zeta", "alpha beta gamma delta epsilon zeta", 0.5 + 0.3 + 0.2),
]
